#include "hhsketch/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <istream>
#include <sstream>

namespace hhsketch::io {

namespace {

constexpr char kStateMagic[8] = {'H', 'H', 'S', 'K', 'S', 'T', 'A', 'T'};
constexpr char kDescriptorFormat[] = "hhsketch-descriptor";
constexpr int kDescriptorVersion = 1;

std::uint64_t parse_index_token(const std::string& tok, std::size_t line_no) {
  std::uint64_t value = 0;
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last) {
    throw CliError(kExitFormat,
                   "malformed index '" + tok + "' at line " + std::to_string(line_no));
  }
  return value;
}

double parse_value_token(const std::string& tok, std::size_t line_no) {
  double value = 0.0;
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last) {
    throw CliError(kExitFormat,
                   "malformed value '" + tok + "' at line " + std::to_string(line_no));
  }
  return value;
}

void parse_pairs(std::istream& in, std::uint64_t n,
                 const std::function<void(std::uint64_t, double)>& sink) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto cut = line.find('#'); cut != std::string::npos) line.resize(cut);
    std::istringstream fields(line);
    std::string a, b, extra;
    if (!(fields >> a)) continue;  // blank or comment-only line
    if (!(fields >> b) || (fields >> extra)) {
      throw CliError(kExitFormat,
                     "expected '<index> <value>' at line " + std::to_string(line_no));
    }
    const std::uint64_t idx = parse_index_token(a, line_no);
    const double val = parse_value_token(b, line_no);
    if (idx >= n) {
      throw CliError(kExitFormat, "index " + std::to_string(idx) + " out of range [0, " +
                                      std::to_string(n) + ") at line " + std::to_string(line_no));
    }
    sink(idx, val);
  }
}

}  // namespace

std::string_view scheme_name(SchemeKind kind) {
  switch (kind) {
    case SchemeKind::general_linf: return "general_linf";
    case SchemeKind::general_l1l1: return "general_l1l1";
    case SchemeKind::strict_signal: return "strict";
    case SchemeKind::demo8: return "demo8";
  }
  return "unknown";
}

std::optional<SchemeKind> scheme_from_name(std::string_view name) {
  if (name == "general_linf") return SchemeKind::general_linf;
  if (name == "general_l1l1") return SchemeKind::general_l1l1;
  if (name == "strict") return SchemeKind::strict_signal;
  if (name == "demo8") return SchemeKind::demo8;
  return std::nullopt;
}

SchemeHandle::SchemeHandle(const RunConfig& cfg) : cfg_(cfg) {
  if (cfg.scheme != SchemeKind::demo8) {
    if (cfg.n < 2) throw CliError(kExitParam, "--n must be at least 2");
    if (cfg.k < 1) throw CliError(kExitParam, "k must be at least 1");
    if (!(cfg.eps > 0.0)) throw CliError(kExitParam, "--eps must be positive");
  }
  try {
    switch (cfg.scheme) {
      case SchemeKind::general_linf:
        combined_ = std::make_unique<CombinedScheme>(cfg.n, cfg.k, cfg.seed);
        break;
      case SchemeKind::general_l1l1:
        l1_ = std::make_unique<L1Scheme>(cfg.n, cfg.k, cfg_.eps, cfg.seed);
        break;
      case SchemeKind::strict_signal:
        strict_ = std::make_unique<StrictScheme>(cfg.n, cfg.k);
        break;
      case SchemeKind::demo8:
        if (cfg.n != 8) throw CliError(kExitParam, "scheme demo8 requires --n 8");
        demo_ = std::make_unique<DemoEmbedMatrix>();
        break;
    }
  } catch (const std::invalid_argument& e) {
    throw CliError(kExitParam, std::string("invalid parameters: ") + e.what());
  }
}

const SketchMatrix& SchemeHandle::matrix() const {
  switch (cfg_.scheme) {
    case SchemeKind::general_linf: return combined_->matrix();
    case SchemeKind::general_l1l1: return l1_->matrix();
    case SchemeKind::strict_signal: return *strict_;
    case SchemeKind::demo8: return *demo_;
  }
  throw std::logic_error("unreachable scheme kind");
}

std::size_t SchemeHandle::support_bound() const {
  switch (cfg_.scheme) {
    case SchemeKind::general_linf: return 4 * cfg_.k;
    case SchemeKind::general_l1l1: return l1_->support_bound();
    case SchemeKind::strict_signal: return 5 * cfg_.k;
    case SchemeKind::demo8: return 0;
  }
  return 0;
}

SchemeHandle::Decoded SchemeHandle::decode(const SketchVector& v) const {
  switch (cfg_.scheme) {
    case SchemeKind::general_linf: {
      auto res = combined_decode(*combined_, v);
      return {std::move(res.xhat), res.stats};
    }
    case SchemeKind::general_l1l1: {
      auto res = l1_decode(*l1_, v);
      return {std::move(res.xhat), res.stats};
    }
    case SchemeKind::strict_signal: {
      auto res = recursive_decode(*strict_, v);
      return {std::move(res.xhat), res.stats};
    }
    case SchemeKind::demo8:
      throw CliError(kExitParam, "scheme demo8 supports build and ingest only");
  }
  throw std::logic_error("unreachable scheme kind");
}

nlohmann::json descriptor_json(const SchemeHandle& handle) {
  const RunConfig& cfg = handle.config();
  nlohmann::json doc{{"format", kDescriptorFormat},
                     {"version", kDescriptorVersion},
                     {"scheme", std::string(scheme_name(cfg.scheme))},
                     {"n", cfg.n},
                     {"rows", handle.matrix().rows()},
                     {"matrix_hash", handle.matrix().descriptor_hash()}};
  switch (cfg.scheme) {
    case SchemeKind::general_linf:
      doc["k"] = cfg.k;
      doc["seed"] = cfg.seed;
      break;
    case SchemeKind::general_l1l1:
      doc["k"] = cfg.k;
      doc["eps"] = cfg.eps;
      doc["seed"] = cfg.seed;
      break;
    case SchemeKind::strict_signal:
      doc["k"] = cfg.k;  // deterministic construction: deliberately no seed
      break;
    case SchemeKind::demo8:
      break;
  }
  return doc;
}

std::string descriptor_text(const SchemeHandle& handle) {
  return descriptor_json(handle).dump(2) + "\n";
}

RunConfig parse_descriptor(const nlohmann::json& doc) {
  try {
    if (!doc.is_object() || doc.value("format", std::string()) != kDescriptorFormat) {
      throw CliError(kExitFormat, "not a sketch descriptor file");
    }
    if (doc.value("version", 0) != kDescriptorVersion) {
      throw CliError(kExitFormat, "unsupported descriptor version");
    }
    const auto kind = scheme_from_name(doc.value("scheme", std::string()));
    if (!kind) throw CliError(kExitFormat, "descriptor names an unknown scheme");
    RunConfig cfg;
    cfg.scheme = *kind;
    cfg.n = doc.value("n", std::uint64_t{0});
    cfg.k = doc.value("k", std::size_t{1});
    cfg.eps = doc.value("eps", cfg.k > 0 ? 1.0 / static_cast<double>(cfg.k) : 1.0);
    cfg.seed = doc.value("seed", std::uint64_t{0});
    return cfg;
  } catch (const nlohmann::json::exception& e) {
    throw CliError(kExitFormat, std::string("bad descriptor: ") + e.what());
  }
}

SchemeHandle load_descriptor_file(const std::string& path) {
  nlohmann::json doc;
  {
    std::ifstream in(path);
    if (!in) throw CliError(kExitFormat, "cannot open descriptor file: " + path);
    try {
      in >> doc;
    } catch (const nlohmann::json::exception& e) {
      throw CliError(kExitFormat, "descriptor is not valid JSON: " + std::string(e.what()));
    }
  }
  SchemeHandle handle(parse_descriptor(doc));
  const auto rows = doc.value("rows", std::size_t{0});
  const auto hash = doc.value("matrix_hash", std::uint64_t{0});
  if (rows != handle.matrix().rows() || hash != handle.matrix().descriptor_hash()) {
    throw CliError(kExitFormat, "descriptor does not match the rebuilt matrix: " + path);
  }
  return handle;
}

void write_state_file(const std::string& path, const SketchVector& v) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CliError(kExitFormat, "cannot open state file for writing: " + path);
  out.write(kStateMagic, sizeof(kStateMagic));
  const std::uint64_t hash = v.matrix_hash;
  const std::uint64_t rows = v.values.size();
  out.write(reinterpret_cast<const char*>(&hash), sizeof(hash));
  out.write(reinterpret_cast<const char*>(&rows), sizeof(rows));
  out.write(reinterpret_cast<const char*>(v.values.data()),
            static_cast<std::streamsize>(rows * sizeof(double)));
  if (!out) throw CliError(kExitFormat, "failed writing state file: " + path);
}

SketchVector read_state_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CliError(kExitFormat, "cannot open state file: " + path);
  char magic[8];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kStateMagic, sizeof(magic)) != 0) {
    throw CliError(kExitFormat, "not a sketch state file: " + path);
  }
  SketchVector v;
  std::uint64_t rows = 0;
  if (!in.read(reinterpret_cast<char*>(&v.matrix_hash), sizeof(v.matrix_hash)) ||
      !in.read(reinterpret_cast<char*>(&rows), sizeof(rows))) {
    throw CliError(kExitFormat, "truncated state file: " + path);
  }
  v.values.resize(rows);
  if (!in.read(reinterpret_cast<char*>(v.values.data()),
               static_cast<std::streamsize>(rows * sizeof(double)))) {
    throw CliError(kExitFormat, "truncated state file: " + path);
  }
  return v;
}

void parse_stream(std::istream& in, std::uint64_t n,
                  const std::function<void(const Update&)>& sink) {
  parse_pairs(in, n, [&](std::uint64_t idx, double val) { sink(Update{idx, val}); });
}

Signal read_signal_file(const std::string& path, std::uint64_t n) {
  std::ifstream in(path);
  if (!in) throw CliError(kExitFormat, "cannot open signal file: " + path);
  Signal x(n, 0.0);
  parse_pairs(in, n, [&](std::uint64_t idx, double val) { x[idx] += val; });
  return x;
}

Report make_report(const SchemeHandle& handle, const SparseVector& xhat,
                   const DecodeStats& stats, double wall_seconds, const Signal* truth) {
  Report report;
  report.m_rows = handle.matrix().rows();
  report.decode_wall_time = wall_seconds;
  report.stats = stats;
  report.recovered.assign(xhat.entries().begin(), xhat.entries().end());
  std::sort(report.recovered.begin(), report.recovered.end(),
            [](const auto& a, const auto& b) {
              double ma = std::abs(a.second), mb = std::abs(b.second);
              if (ma != mb) return ma > mb;
              return a.first < b.first;
            });
  if (truth != nullptr) {
    const RunConfig& cfg = handle.config();
    const std::uint64_t n = cfg.n;
    const std::size_t k = cfg.k;
    const std::size_t k2 = (cfg.k > 0 && cfg.k <= 0xffffffffull)
                               ? static_cast<std::size_t>(std::min<std::uint64_t>(
                                     n, static_cast<std::uint64_t>(cfg.k) * cfg.k))
                               : static_cast<std::size_t>(n);
    VerifyBlock block;
    block.linf_error = linf_error(*truth, xhat);
    block.l1_error = l1_error(*truth, xhat);
    block.tail_norm_k = tail_norm(*truth, k);
    block.tail_norm_k2 = tail_norm(*truth, k2);
    switch (cfg.scheme) {
      case SchemeKind::general_linf:
        block.guarantee_satisfied = oracle_verify_linf(*truth, xhat, k, k2);
        break;
      case SchemeKind::general_l1l1: {
        const double budget = (1.0 + cfg.eps) * block.tail_norm_k;
        const double slack = 1e-9 * (1.0 + budget);
        block.guarantee_satisfied = block.l1_error <= budget + slack;
        break;
      }
      case SchemeKind::strict_signal:
        block.guarantee_satisfied = oracle_verify_linf(*truth, xhat, k, k);
        break;
      case SchemeKind::demo8:
        block.guarantee_satisfied = true;
        break;
    }
    report.verification = block;
  }
  return report;
}

nlohmann::json report_json(const Report& report) {
  nlohmann::json recovered = nlohmann::json::array();
  for (const auto& [idx, est] : report.recovered) {
    recovered.push_back(nlohmann::json{{"index", idx}, {"estimate", est}});
  }
  nlohmann::json doc{{"recovered", std::move(recovered)},
                     {"m_rows", report.m_rows},
                     {"decode_wall_time", report.decode_wall_time},
                     {"candidate_evaluations", report.stats.candidate_evaluations}};
  if (report.verification) {
    const VerifyBlock& b = *report.verification;
    doc["verification"] = nlohmann::json{{"linf_error", b.linf_error},
                                         {"l1_error", b.l1_error},
                                         {"tail_norm_k", b.tail_norm_k},
                                         {"tail_norm_k2", b.tail_norm_k2},
                                         {"guarantee_satisfied", b.guarantee_satisfied}};
  }
  return doc;
}

std::string report_csv(const Report& report) {
  std::ostringstream out;
  out << std::setprecision(17);
  out << "# m_rows," << report.m_rows << "\n";
  out << "# decode_wall_time," << report.decode_wall_time << "\n";
  out << "# candidate_evaluations," << report.stats.candidate_evaluations << "\n";
  if (report.verification) {
    const VerifyBlock& b = *report.verification;
    out << "# linf_error," << b.linf_error << "\n";
    out << "# l1_error," << b.l1_error << "\n";
    out << "# tail_norm_k," << b.tail_norm_k << "\n";
    out << "# tail_norm_k2," << b.tail_norm_k2 << "\n";
    out << "# guarantee_satisfied," << (b.guarantee_satisfied ? "true" : "false") << "\n";
  }
  out << "index,estimate\n";
  for (const auto& [idx, est] : report.recovered) {
    out << idx << "," << est << "\n";
  }
  return out.str();
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CliError(kExitFormat, "cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const std::string& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CliError(kExitFormat, "cannot open file for writing: " + path);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw CliError(kExitFormat, "failed writing file: " + path);
}

}  // namespace hhsketch::io
