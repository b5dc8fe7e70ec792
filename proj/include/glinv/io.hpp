#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>

#include "glinv/experiments.hpp"

namespace glinv {

inline constexpr const char* kToolName = "glinv";
inline constexpr const char* kToolVersion = "0.1.0";

/// FNV-1a 64-bit hash; used to fingerprint effective configurations.
inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

/// Provenance stamp for artifact files: tool version, configuration hash,
/// and RNG seed. Text artifacts carry it as their first line.
struct ArtifactStamp {
  std::string config_hash = "0000000000000000";
  std::uint64_t seed = 0;

  std::string header_line() const {
    return std::string("# ") + kToolName + " " + kToolVersion + " config=" + config_hash +
           " seed=" + std::to_string(seed);
  }
};

/// Full-precision decimal form that survives a round-trip through text.
inline std::string num_full(double v) { return num_str(v, "%.17g"); }

inline std::ofstream open_out(const std::filesystem::path& path, bool binary = false) {
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw std::runtime_error("cannot open output file: " + path.string());
  return out;
}

/// Interior-field CSV dump, one node per row: i, j, x, y, re, im.
inline void write_field_csv(const std::filesystem::path& path, const Grid2D& g, const Field& v,
                            const ArtifactStamp& stamp) {
  detail::require_length(g, v, "write_field_csv");
  std::ofstream out = open_out(path);
  out << stamp.header_line() << "\n";
  out << "i,j,x,y,re,im\n";
  for (int k = 0; k < g.m; ++k) {
    const auto [i, j] = g.node(k);
    out << i << ',' << j << ',' << num_full(g.x(i)) << ',' << num_full(g.y(j)) << ','
        << num_full(v[k].real()) << ',' << num_full(v[k].imag()) << "\n";
  }
}

/// Lossless little-endian binary field dump:
///   magic "GLF1", u32 Nx-1, u32 Ny-1, then m interleaved f64 (re, im) pairs.
inline void write_field_glf1(const std::filesystem::path& path, const Grid2D& g, const Field& v) {
  static_assert(std::endian::native == std::endian::little,
                "GLF1 writer assumes a little-endian host");
  detail::require_length(g, v, "write_field_glf1");
  std::ofstream out = open_out(path, /*binary=*/true);
  out.write("GLF1", 4);
  const std::uint32_t nx1 = static_cast<std::uint32_t>(g.Nx - 1);
  const std::uint32_t ny1 = static_cast<std::uint32_t>(g.Ny - 1);
  out.write(reinterpret_cast<const char*>(&nx1), 4);
  out.write(reinterpret_cast<const char*>(&ny1), 4);
  for (int k = 0; k < g.m; ++k) {
    const double re = v[k].real();
    const double im = v[k].imag();
    out.write(reinterpret_cast<const char*>(&re), 8);
    out.write(reinterpret_cast<const char*>(&im), 8);
  }
}

struct Glf1Field {
  std::uint32_t nx_interior = 0;
  std::uint32_t ny_interior = 0;
  Field values;
};

inline Glf1Field read_field_glf1(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open GLF1 file: " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "GLF1", 4) != 0)
    throw std::runtime_error("not a GLF1 file: " + path.string());
  Glf1Field out;
  in.read(reinterpret_cast<char*>(&out.nx_interior), 4);
  in.read(reinterpret_cast<char*>(&out.ny_interior), 4);
  const std::int64_t m = static_cast<std::int64_t>(out.nx_interior) * out.ny_interior;
  out.values.resize(m);
  for (std::int64_t k = 0; k < m; ++k) {
    double re = 0.0, im = 0.0;
    in.read(reinterpret_cast<char*>(&re), 8);
    in.read(reinterpret_cast<char*>(&im), 8);
    out.values[k] = Complex(re, im);
  }
  if (!in) throw std::runtime_error("truncated GLF1 file: " + path.string());
  return out;
}

/// Iteration history CSV: k, J, misfit, grad_norm, alpha, beta, backtracks.
inline void write_history_csv(const std::filesystem::path& path, const RunReport& report,
                              const ArtifactStamp& stamp) {
  std::ofstream out = open_out(path);
  out << stamp.header_line() << "\n";
  out << "k,J,misfit,grad_norm,alpha,beta,backtracks\n";
  for (const IterationRecord& rec : report.history)
    out << rec.k << ',' << num_full(rec.J) << ',' << num_full(rec.misfit) << ','
        << num_full(rec.grad_norm) << ',' << num_full(rec.alpha) << ',' << num_full(rec.beta)
        << ',' << rec.backtracks << "\n";
}

inline std::string metric_or_nan(const std::optional<double>& v) {
  return v ? num_full(*v) : std::string("nan");
}

/// Single-row metrics summary for one reconstruction.
inline void write_metrics_csv(const std::filesystem::path& path, const Metrics& metrics,
                              StopReason stop, const ArtifactStamp& stamp) {
  std::ofstream out = open_out(path);
  out << stamp.header_line() << "\n";
  out << "iterations,misfit_sq_ratio,q_err_sq_ratio,f_err_sq_ratio,stop_reason\n";
  out << metrics.iterations << ',' << num_full(metrics.misfit_sq_ratio) << ','
      << metric_or_nan(metrics.q_err_sq_ratio) << ',' << metric_or_nan(metrics.f_err_sq_ratio)
      << ',' << to_string(stop) << "\n";
}

/// Benchmark table CSV, one row per configuration. Column order: config
/// fields, iterations, the three error ratios, wall-clock seconds. The wall
/// time is the only column that varies between reruns of the same seed.
inline void write_table_csv(const std::filesystem::path& path, const std::vector<TableRow>& rows,
                            const ArtifactStamp& stamp) {
  std::ofstream out = open_out(path);
  out << stamp.header_line() << "\n";
  out << "label,example,nx,ny,nt,eps,tau,delta,seed,iterations,misfit_sq_ratio,q_err_sq_ratio,"
         "f_err_sq_ratio,wall_s\n";
  for (const TableRow& row : rows)
    out << row.label << ',' << row.spec.example_id << ',' << row.spec.Nx << ',' << row.spec.Ny
        << ',' << row.spec.Nt << ',' << num_str(row.spec.eps) << ',' << num_str(row.spec.tau)
        << ',' << num_str(row.spec.noise_delta) << ',' << row.spec.seed << ','
        << row.metrics.iterations << ',' << num_full(row.metrics.misfit_sq_ratio) << ','
        << metric_or_nan(row.metrics.q_err_sq_ratio) << ','
        << metric_or_nan(row.metrics.f_err_sq_ratio) << ',' << num_str(row.wall_s, "%.3f")
        << "\n";
}

}  // namespace glinv
