#pragma once

#include <string>
#include <utility>
#include <vector>

#include "fairbreak/errors.hpp"
#include "fairbreak/io.hpp"

namespace fairbreak {

struct Sample {
  std::vector<double> x;
  int y = 0;
  int z = 0;
};

// Finite sample list (x_i, y_i, z_i) with consistent feature dimension.
class LabeledDataset {
 public:
  LabeledDataset(int dim, std::vector<Sample> samples)
      : dim_(dim), samples_(std::move(samples)) {
    if (dim_ < 1) throw DimensionError("dataset dimension must be >= 1");
    if (samples_.empty()) throw InvalidArgument("dataset must be nonempty");
    for (const Sample& s : samples_) {
      if (static_cast<int>(s.x.size()) != dim_) {
        throw DimensionError("sample feature vector has wrong length");
      }
      if ((s.y != 0 && s.y != 1) || (s.z != 0 && s.z != 1)) {
        throw InvalidArgument("labels y,z must be 0 or 1");
      }
    }
  }

  int dim() const { return dim_; }
  std::size_t size() const { return samples_.size(); }
  const Sample& sample(std::size_t i) const { return samples_[i]; }
  const std::vector<Sample>& samples() const { return samples_; }

  LabeledDataset with_flipped(const std::vector<std::size_t>& indices, bool flip_y,
                              bool flip_z) const {
    std::vector<Sample> flipped = samples_;
    for (std::size_t i : indices) {
      if (i >= flipped.size()) throw InvalidArgument("flip index out of range");
      if (flip_y) flipped[i].y = 1 - flipped[i].y;
      if (flip_z) flipped[i].z = 1 - flipped[i].z;
    }
    return LabeledDataset(dim_, std::move(flipped));
  }

 private:
  int dim_;
  std::vector<Sample> samples_;
};

// ---- CSV format -------------------------------------------------------------
// header: x1,...,xn,y,z

inline std::string serialize_dataset_csv(const LabeledDataset& d) {
  std::string text;
  for (int k = 1; k <= d.dim(); ++k) {
    text += (k == 1 ? "x" : ",x") + std::to_string(k);
  }
  text += ",y,z\n";
  for (const Sample& s : d.samples()) {
    for (int k = 0; k < d.dim(); ++k) {
      if (k) text += ',';
      text += format_double(s.x[k]);
    }
    text += "," + std::to_string(s.y) + "," + std::to_string(s.z) + "\n";
  }
  return text;
}

inline void save_dataset_csv(const std::string& path, const LabeledDataset& d) {
  write_text(path, serialize_dataset_csv(d));
}

inline LabeledDataset parse_dataset_csv(const std::vector<std::string>& lines) {
  if (lines.empty()) throw FileFormatError("empty dataset file");
  const std::vector<std::string> header = split(lines[0], ',');
  if (header.size() < 3 || header[header.size() - 2] != "y" || header.back() != "z") {
    throw FileFormatError("dataset header must be x1,...,xn,y,z");
  }
  const int dim = static_cast<int>(header.size()) - 2;
  for (int k = 0; k < dim; ++k) {
    if (header[k] != "x" + std::to_string(k + 1)) {
      throw FileFormatError("bad feature column name '" + header[k] + "'");
    }
  }
  std::vector<Sample> samples;
  for (std::size_t row = 1; row < lines.size(); ++row) {
    if (lines[row].empty()) continue;
    const std::vector<std::string> fields = split(lines[row], ',');
    if (fields.size() != header.size()) {
      throw FileFormatError("row " + std::to_string(row) + " has " +
                            std::to_string(fields.size()) + " fields, expected " +
                            std::to_string(header.size()));
    }
    Sample s;
    for (int k = 0; k < dim; ++k) s.x.push_back(parse_double(fields[k]));
    const long long y = parse_int(fields[dim]);
    const long long z = parse_int(fields[dim + 1]);
    if ((y != 0 && y != 1) || (z != 0 && z != 1)) {
      throw FileFormatError("labels y,z must be 0 or 1 at row " + std::to_string(row));
    }
    s.y = static_cast<int>(y);
    s.z = static_cast<int>(z);
    samples.push_back(std::move(s));
  }
  return LabeledDataset(dim, std::move(samples));
}

inline LabeledDataset load_dataset_csv(const std::string& path) {
  return parse_dataset_csv(read_lines(path));
}

}  // namespace fairbreak
