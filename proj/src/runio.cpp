#include "thcrl/runio.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

namespace fs = std::filesystem;

namespace thcrl {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void RunLog::write_csv(const std::string& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write runlog " + path);
  out << "epoch,phase,loss_rec,loss_akc,loss_total,acc,nmi,pur,wall_ms\n";
  for (const auto& r : rows) {
    out << r.epoch << ',' << r.phase << ',' << format_double(r.loss_rec) << ',';
    if (r.has_akc) out << format_double(r.loss_akc);
    out << ',' << format_double(r.loss_total) << ',';
    if (r.has_metrics)
      out << format_double(r.acc) << ',' << format_double(r.nmi) << ',' << format_double(r.pur);
    else
      out << ",,";
    out << ',' << format_double(r.wall_ms) << '\n';
  }
  if (!out) throw IoError("short write on runlog " + path);
}

void write_metrics_json(const std::string& path, const MetricReport& report, int64_t k,
                        double inertia, int64_t n_iter) {
  nlohmann::json j;
  j["acc"] = report.acc;
  j["nmi"] = report.nmi;
  j["pur"] = report.pur;
  j["k"] = k;
  j["inertia"] = inertia;
  j["n_iter"] = n_iter;
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write metrics " + path);
  out << j.dump(2) << "\n";
}

void write_embeddings_f32(const std::string& path, const Matrix& h) {
  std::vector<float> f(h.a.size());
  for (size_t i = 0; i < f.size(); ++i) f[i] = float(h.a[i]);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write embeddings " + path);
  out.write(reinterpret_cast<const char*>(f.data()), std::streamsize(f.size() * sizeof(float)));
  if (!out) throw IoError("short write on embeddings " + path);

  fs::path sidecar(path);
  sidecar.replace_extension(".shape");
  std::ofstream shp(sidecar, std::ios::trunc);
  if (!shp) throw IoError("cannot write shape sidecar " + sidecar.string());
  shp << h.rows << ' ' << h.cols << '\n';
}

Matrix read_embeddings_f32(const std::string& path) {
  fs::path sidecar(path);
  sidecar.replace_extension(".shape");
  std::ifstream shp(sidecar);
  if (!shp) throw IoError("cannot open shape sidecar " + sidecar.string());
  int64_t rows = 0, cols = 0;
  shp >> rows >> cols;
  if (rows <= 0 || cols <= 0) throw IoError("malformed shape sidecar " + sidecar.string());

  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw IoError("cannot open embeddings " + path);
  auto bytes = in.tellg();
  if (bytes != std::streamoff(size_t(rows) * size_t(cols) * sizeof(float)))
    throw ShapeError("embeddings " + path + " size does not match sidecar " +
                     std::to_string(rows) + " x " + std::to_string(cols));
  in.seekg(0);
  std::vector<float> f(size_t(rows) * size_t(cols));
  in.read(reinterpret_cast<char*>(f.data()), bytes);
  Matrix h(rows, cols);
  for (size_t i = 0; i < f.size(); ++i) h.a[i] = double(f[i]);
  return h;
}

}  // namespace thcrl
