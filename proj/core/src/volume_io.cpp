#include "mtbo/volume_io.hpp"

#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace mtbo {

namespace {

void write_header(const std::string& path, const Dims& dims,
                  const std::array<double, 3>& spacing, const std::string& dtype) {
  nlohmann::json j;
  j["dims"] = {dims.x, dims.y, dims.z};
  j["spacing"] = {spacing[0], spacing[1], spacing[2]};
  j["dtype"] = dtype;
  j["order"] = "x-fastest";
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << "\n";
}

nlohmann::json read_header(const std::string& path, const std::string& expect_dtype) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  nlohmann::json j;
  in >> j;
  if (j.at("dtype").get<std::string>() != expect_dtype)
    throw std::runtime_error(path + ": expected dtype " + expect_dtype);
  if (j.value("order", "x-fastest") != "x-fastest")
    throw std::runtime_error(path + ": unsupported order");
  return j;
}

template <typename T>
void write_raw(const std::string& path, const std::vector<T>& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.write(reinterpret_cast<const char*>(data.data()),
            static_cast<std::streamsize>(data.size() * sizeof(T)));
}

template <typename T>
std::vector<T> read_raw(const std::string& path, std::size_t count) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::vector<T> data(count);
  in.read(reinterpret_cast<char*>(data.data()),
          static_cast<std::streamsize>(count * sizeof(T)));
  if (static_cast<std::size_t>(in.gcount()) != count * sizeof(T))
    throw std::runtime_error(path + ": truncated raw file");
  return data;
}

}  // namespace

void write_volume(const IntensityVolume& vol, const std::string& path_stem) {
  write_header(path_stem + ".json", vol.dims, vol.spacing, "f32");
  write_raw(path_stem + ".raw", vol.data);
}

IntensityVolume read_volume(const std::string& path_stem) {
  const nlohmann::json j = read_header(path_stem + ".json", "f32");
  IntensityVolume vol;
  vol.dims = {j["dims"][0].get<int>(), j["dims"][1].get<int>(), j["dims"][2].get<int>()};
  vol.spacing = {j["spacing"][0].get<double>(), j["spacing"][1].get<double>(),
                 j["spacing"][2].get<double>()};
  vol.data = read_raw<float>(path_stem + ".raw", vol.dims.count());
  return vol;
}

void write_mask(const VoxelMask& mask, const std::string& path_stem) {
  write_header(path_stem + ".json", mask.dims, {1.0, 1.0, 1.0}, "u8");
  write_raw(path_stem + ".raw", mask.data);
}

VoxelMask read_mask(const std::string& path_stem) {
  const nlohmann::json j = read_header(path_stem + ".json", "u8");
  VoxelMask mask;
  mask.dims = {j["dims"][0].get<int>(), j["dims"][1].get<int>(), j["dims"][2].get<int>()};
  mask.data = read_raw<std::uint8_t>(path_stem + ".raw", mask.dims.count());
  return mask;
}

void write_levels(const DiscretizedROI& roi, const std::string& path_stem) {
  write_raw(path_stem + ".raw", roi.levels);
  nlohmann::json j;
  j["q0"] = roi.q0;
  j["qN"] = roi.qN;
  j["num_bins"] = roi.num_levels;
  j["num_voxels"] = roi.levels.size();
  std::ofstream out(path_stem + ".json");
  out << j.dump(2) << "\n";
}

}  // namespace mtbo
