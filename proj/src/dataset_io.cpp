#include "sknn/dataset_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "sknn/rng.hpp"

namespace sknn {

VecFormat format_from_name(const std::string& name) {
  if (name == "fvecs") return VecFormat::Fvecs;
  if (name == "bvecs") return VecFormat::Bvecs;
  if (name == "ivecs") return VecFormat::Ivecs;
  throw std::invalid_argument("unknown vector format: " + name);
}

RawDataset load_vecs(const std::string& path, VecFormat format) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);

  RawDataset out;
  size_t record = 0;
  while (true) {
    int32_t d = 0;
    is.read(reinterpret_cast<char*>(&d), 4);
    if (is.gcount() == 0) break;  // clean EOF
    if (is.gcount() != 4 || d <= 0)
      throw std::runtime_error(path + ": corrupt record header at record " + std::to_string(record));
    if (out.d == 0) out.d = static_cast<uint32_t>(d);
    if (static_cast<uint32_t>(d) != out.d)
      throw std::runtime_error(path + ": dimension mismatch at record " + std::to_string(record) +
                               " (got " + std::to_string(d) + ", expected " + std::to_string(out.d) +
                               ")");
    std::vector<double> row(static_cast<size_t>(d));
    if (format == VecFormat::Fvecs) {
      std::vector<float> buf(row.size());
      is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(4 * buf.size()));
      if (static_cast<size_t>(is.gcount()) != 4 * buf.size())
        throw std::runtime_error(path + ": truncated record " + std::to_string(record));
      for (size_t i = 0; i < buf.size(); ++i) row[i] = buf[i];
    } else if (format == VecFormat::Bvecs) {
      std::vector<uint8_t> buf(row.size());
      is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
      if (static_cast<size_t>(is.gcount()) != buf.size())
        throw std::runtime_error(path + ": truncated record " + std::to_string(record));
      for (size_t i = 0; i < buf.size(); ++i) row[i] = buf[i];
    } else {
      std::vector<int32_t> buf(row.size());
      is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(4 * buf.size()));
      if (static_cast<size_t>(is.gcount()) != 4 * buf.size())
        throw std::runtime_error(path + ": truncated record " + std::to_string(record));
      for (size_t i = 0; i < buf.size(); ++i) row[i] = buf[i];
    }
    out.rows.push_back(std::move(row));
    ++record;
  }
  return out;
}

void save_fvecs(const std::string& path, const RawDataset& data) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path);
  for (const auto& row : data.rows) {
    const int32_t d = static_cast<int32_t>(row.size());
    os.write(reinterpret_cast<const char*>(&d), 4);
    for (double v : row) {
      const float f = static_cast<float>(v);
      os.write(reinterpret_cast<const char*>(&f), 4);
    }
  }
}

RawDataset gen_synthetic(const SyntheticOptions& opts) {
  if (opts.n == 0 || opts.d == 0 || opts.blobs == 0)
    throw std::invalid_argument("gen_synthetic: n, d, blobs must be positive");
  Rng rng(opts.seed);

  std::vector<std::vector<double>> centers;
  centers.reserve(opts.blobs);
  const double min_sep2 = opts.min_sep * opts.min_sep;
  uint32_t attempts = 0;
  while (centers.size() < opts.blobs) {
    std::vector<double> c(opts.d);
    for (auto& v : c) v = rng.real01() * opts.box;
    bool ok = true;
    if (opts.min_sep > 0.0) {
      for (const auto& other : centers) {
        double dist2 = 0.0;
        for (uint32_t j = 0; j < opts.d; ++j) dist2 += (c[j] - other[j]) * (c[j] - other[j]);
        if (dist2 < min_sep2) {
          ok = false;
          break;
        }
      }
    }
    if (ok) {
      centers.push_back(std::move(c));
    } else if (++attempts > 100000) {
      throw std::runtime_error("gen_synthetic: cannot satisfy min_sep; lower blobs or min_sep");
    }
  }

  RawDataset out;
  out.d = opts.d;
  out.rows.reserve(opts.n);
  for (uint64_t i = 0; i < opts.n; ++i) {
    const auto& c = centers[i % opts.blobs];
    std::vector<double> row(opts.d);
    for (uint32_t j = 0; j < opts.d; ++j) row[j] = c[j] + rng.gaussian() * opts.spread;
    out.rows.push_back(std::move(row));
  }
  return out;
}

QuantizedWithBounds quantize_dataset(const RawDataset& raw, uint32_t b_c) {
  QuantizedWithBounds out;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const auto& row : raw.rows)
    for (double v : row) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  if (!(hi > lo)) hi = lo + 1.0;  // degenerate constant dataset
  out.lo = lo;
  out.hi = hi;
  out.data.d = raw.d;
  out.data.points.resize(raw.n());
  for (size_t i = 0; i < raw.n(); ++i) {
    out.data.points[i].coords = quantize(raw.rows[i], b_c, lo, hi);
    out.data.points[i].id = i;
  }
  return out;
}

}  // namespace sknn
