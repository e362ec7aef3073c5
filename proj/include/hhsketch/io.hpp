#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "hhsketch/encoding.hpp"
#include "hhsketch/recover_l1.hpp"
#include "hhsketch/recover_linf.hpp"
#include "hhsketch/signal.hpp"
#include "hhsketch/sketch.hpp"
#include "hhsketch/strict.hpp"

namespace hhsketch::io {

inline constexpr int kExitOk = 0;
inline constexpr int kExitParam = 2;      // invalid parameters / combinations
inline constexpr int kExitFormat = 3;     // malformed files, mismatched state
inline constexpr int kExitGuarantee = 4;  // --verify --strict-check failed

/// Error carrying the process exit code it should map to.
struct CliError : std::runtime_error {
  CliError(int code, const std::string& msg) : std::runtime_error(msg), exit_code(code) {}
  int exit_code;
};

enum class SchemeKind {
  general_linf,   // for-all l_inf/l1 recovery (combined pipeline)
  general_l1l1,   // for-all l1/l1 recovery
  strict_signal,  // nonnegative signals, RS-code split tree
  demo8,          // fixed 8x8 teaching matrix; build/ingest only
};

std::string_view scheme_name(SchemeKind kind);
std::optional<SchemeKind> scheme_from_name(std::string_view name);

struct RunConfig {
  std::uint64_t n = 0;
  SchemeKind scheme = SchemeKind::general_linf;
  std::size_t k = 1;
  double eps = 1.0;  // the supplied accuracy, or 1/k when only k was given
  std::uint64_t seed = 0;
};

/// Owns whichever scheme a config names and presents the uniform surface the
/// command-line tool needs: measurement matrix, decoder and support bound.
/// Construction validates parameters and throws CliError (exit code 2).
class SchemeHandle {
 public:
  explicit SchemeHandle(const RunConfig& cfg);

  const RunConfig& config() const { return cfg_; }
  const SketchMatrix& matrix() const;
  std::size_t support_bound() const;

  struct Decoded {
    SparseVector xhat;
    DecodeStats stats;
  };
  /// Dispatches to the scheme's decoder. demo8 has none (CliError, code 2).
  Decoded decode(const SketchVector& v) const;

 private:
  RunConfig cfg_;
  std::unique_ptr<CombinedScheme> combined_;
  std::unique_ptr<L1Scheme> l1_;
  std::unique_ptr<StrictScheme> strict_;
  std::unique_ptr<DemoEmbedMatrix> demo_;
};

/// Canonical descriptor document: enough to rebuild the matrix bit-for-bit.
/// The strict and demo8 schemes carry no seed field; rebuilding twice from the
/// same config yields byte-identical text.
nlohmann::json descriptor_json(const SchemeHandle& handle);
std::string descriptor_text(const SchemeHandle& handle);
RunConfig parse_descriptor(const nlohmann::json& doc);
/// Reads a descriptor file, rebuilds the scheme, and cross-checks the recorded
/// row count and matrix hash against the rebuilt matrix.
SchemeHandle load_descriptor_file(const std::string& path);

/// Sketch state file: 8-byte magic, matrix descriptor hash, row count, then
/// the counters as little-endian 64-bit floats.
void write_state_file(const std::string& path, const SketchVector& v);
SketchVector read_state_file(const std::string& path);

/// Update stream: one `<index> <delta>` per line, `#` starts a comment.
/// Malformed lines and out-of-range indices raise CliError (exit code 3) with
/// the offending line number.
void parse_stream(std::istream& in, std::uint64_t n,
                  const std::function<void(const Update&)>& sink);
/// Ground-truth signal file: sparse `<index> <value>` listing, same grammar.
Signal read_signal_file(const std::string& path, std::uint64_t n);

struct VerifyBlock {
  double linf_error = 0.0;
  double l1_error = 0.0;
  double tail_norm_k = 0.0;
  double tail_norm_k2 = 0.0;
  bool guarantee_satisfied = false;
};

struct Report {
  std::vector<std::pair<std::uint64_t, double>> recovered;  // magnitude desc, index asc
  std::size_t m_rows = 0;
  double decode_wall_time = 0.0;  // seconds
  DecodeStats stats;
  std::optional<VerifyBlock> verification;
};

Report make_report(const SchemeHandle& handle, const SparseVector& xhat,
                   const DecodeStats& stats, double wall_seconds, const Signal* truth);
nlohmann::json report_json(const Report& report);
std::string report_csv(const Report& report);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view text);

}  // namespace hhsketch::io
