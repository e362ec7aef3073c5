#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "hhsketch/io.hpp"

namespace {

using hhsketch::io::CliError;
using hhsketch::io::RunConfig;
using hhsketch::io::SchemeHandle;
using hhsketch::io::SchemeKind;

struct BuildOpts {
  std::uint64_t n = 0;
  std::optional<std::size_t> k;
  std::optional<double> eps;
  std::string scheme;
  std::uint64_t seed = 0;
  std::string out;
};

RunConfig resolve_config(const BuildOpts& opts) {
  const auto kind = hhsketch::io::scheme_from_name(opts.scheme);
  if (!kind) {
    throw CliError(hhsketch::io::kExitParam, "unknown scheme: " + opts.scheme);
  }
  RunConfig cfg;
  cfg.scheme = *kind;
  cfg.n = opts.n;
  cfg.seed = opts.seed;
  if (opts.k && opts.eps) {
    throw CliError(hhsketch::io::kExitParam, "provide exactly one of --k and --eps");
  }
  if (!opts.k && !opts.eps) {
    if (cfg.scheme != SchemeKind::demo8) {
      throw CliError(hhsketch::io::kExitParam, "provide exactly one of --k and --eps");
    }
    cfg.k = 1;
    cfg.eps = 1.0;
    return cfg;
  }
  if (opts.k) {
    if (*opts.k < 1) throw CliError(hhsketch::io::kExitParam, "--k must be at least 1");
    cfg.k = *opts.k;
    cfg.eps = 1.0 / static_cast<double>(cfg.k);
  } else {
    if (!(*opts.eps > 0.0)) throw CliError(hhsketch::io::kExitParam, "--eps must be positive");
    cfg.eps = *opts.eps;
    cfg.k = static_cast<std::size_t>(std::ceil(1.0 / cfg.eps));
    if (cfg.k < 1) cfg.k = 1;
  }
  return cfg;
}

int run_build(const BuildOpts& opts) {
  const RunConfig cfg = resolve_config(opts);
  SchemeHandle handle(cfg);
  hhsketch::io::write_text_file(opts.out, hhsketch::io::descriptor_text(handle));
  std::cout << "wrote descriptor " << opts.out << " (scheme=" << hhsketch::io::scheme_name(cfg.scheme)
            << ", n=" << cfg.n << ", k=" << cfg.k << ", rows=" << handle.matrix().rows() << ")\n";
  return hhsketch::io::kExitOk;
}

int run_ingest(const std::string& descriptor_path, const std::string& stream_path,
               const std::string& state_path) {
  SchemeHandle handle = hhsketch::io::load_descriptor_file(descriptor_path);
  std::ifstream in(stream_path);
  if (!in) {
    throw CliError(hhsketch::io::kExitFormat, "cannot open stream file: " + stream_path);
  }
  hhsketch::SketchVector v = hhsketch::make_sketch(handle.matrix());
  std::size_t updates = 0;
  hhsketch::io::parse_stream(in, handle.config().n, [&](const hhsketch::Update& u) {
    hhsketch::ingest(handle.matrix(), v, u);
    ++updates;
  });
  hhsketch::io::write_state_file(state_path, v);
  std::cout << "ingested " << updates << " updates into " << v.values.size() << " rows -> "
            << state_path << "\n";
  if (handle.config().scheme == SchemeKind::demo8) {
    std::cout << "measurements:";
    for (double value : v.values) std::cout << " " << value;
    std::cout << "\n";
  }
  return hhsketch::io::kExitOk;
}

int run_decode(const std::string& descriptor_path, const std::string& state_path,
               const std::string& out_path, const std::string& format,
               const std::string& verify_path, bool strict_check) {
  if (format != "json" && format != "csv") {
    throw CliError(hhsketch::io::kExitParam, "--format must be json or csv");
  }
  if (strict_check && verify_path.empty()) {
    throw CliError(hhsketch::io::kExitParam, "--strict-check requires --verify");
  }
  SchemeHandle handle = hhsketch::io::load_descriptor_file(descriptor_path);
  hhsketch::SketchVector state = hhsketch::io::read_state_file(state_path);
  if (state.matrix_hash != handle.matrix().descriptor_hash() ||
      state.values.size() != handle.matrix().rows()) {
    throw CliError(hhsketch::io::kExitFormat,
                   "state file was produced by a different matrix: " + state_path);
  }
  const auto t0 = std::chrono::steady_clock::now();
  SchemeHandle::Decoded decoded = handle.decode(state);
  const auto t1 = std::chrono::steady_clock::now();
  const double wall = std::chrono::duration<double>(t1 - t0).count();

  std::optional<hhsketch::Signal> truth;
  if (!verify_path.empty()) {
    truth = hhsketch::io::read_signal_file(verify_path, handle.config().n);
  }
  const hhsketch::io::Report report = hhsketch::io::make_report(
      handle, decoded.xhat, decoded.stats, wall, truth ? &*truth : nullptr);
  const std::string text = format == "json" ? hhsketch::io::report_json(report).dump(2) + "\n"
                                            : hhsketch::io::report_csv(report);
  if (out_path.empty()) {
    std::cout << text;
  } else {
    hhsketch::io::write_text_file(out_path, text);
  }
  if (strict_check && report.verification && !report.verification->guarantee_satisfied) {
    std::cerr << "guarantee verification failed\n";
    return hhsketch::io::kExitGuarantee;
  }
  return hhsketch::io::kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deterministic sketches for l1 heavy hitters: build, ingest, decode"};
  app.require_subcommand(1);

  BuildOpts build_opts;
  CLI::App* build = app.add_subcommand("build", "Construct a sketch and write its descriptor");
  build->add_option("--n", build_opts.n, "universe size")->required();
  build->add_option("--k", build_opts.k, "target sparsity");
  build->add_option("--eps", build_opts.eps, "target accuracy (k = ceil(1/eps))");
  build->add_option("--scheme", build_opts.scheme, "general_linf | general_l1l1 | strict | demo8")
      ->required();
  build->add_option("--seed", build_opts.seed, "matrix seed (ignored by seedless schemes)");
  build->add_option("--out", build_opts.out, "descriptor output path")->required();

  std::string ingest_descriptor, ingest_in, ingest_out;
  CLI::App* ingest = app.add_subcommand("ingest", "Apply an update stream to a sketch state");
  ingest->add_option("descriptor", ingest_descriptor, "descriptor file")->required();
  ingest->add_option("--in", ingest_in, "update stream file")->required();
  ingest->add_option("--out", ingest_out, "state output path")->required();

  std::string decode_descriptor, decode_in, decode_out, decode_format = "json", decode_verify;
  bool decode_strict_check = false;
  CLI::App* decode = app.add_subcommand("decode", "Recover heavy hitters from a sketch state");
  decode->add_option("descriptor", decode_descriptor, "descriptor file")->required();
  decode->add_option("--in", decode_in, "state file")->required();
  decode->add_option("--out", decode_out, "report output path (default: stdout)");
  decode->add_option("--format", decode_format, "json | csv");
  decode->add_option("--verify", decode_verify, "ground-truth signal file");
  decode->add_flag("--strict-check", decode_strict_check,
                   "exit nonzero when the verified guarantee fails");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return hhsketch::io::kExitParam;
  }

  try {
    if (build->parsed()) return run_build(build_opts);
    if (ingest->parsed()) return run_ingest(ingest_descriptor, ingest_in, ingest_out);
    return run_decode(decode_descriptor, decode_in, decode_out, decode_format, decode_verify,
                      decode_strict_check);
  } catch (const CliError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code;
  } catch (const hhsketch::StrictModelViolation& e) {
    std::cerr << "error: " << e.what() << "\n";
    return hhsketch::io::kExitFormat;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return hhsketch::io::kExitParam;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
