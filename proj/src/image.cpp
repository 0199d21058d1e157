#include "fss3d/image.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "fss3d/errors.hpp"

namespace fss {

float BeamBinImage::max_intensity() const {
  float m = 0.0f;
  for (float v : intensities) m = std::max(m, v);
  return m;
}

void BeamBinImage::normalize_peak() {
  float m = max_intensity();
  if (m <= 0.0f) return;
  for (float& v : intensities) v /= m;
}

size_t BinaryMask::count() const {
  size_t n = 0;
  for (auto b : bits) n += (b != 0);
  return n;
}

namespace {

void write_meta(std::ostream& out, const SonarGeometry& g, const SonarPose& p) {
  out.precision(17);
  out << "n_beams " << g.n_beams << "\n"
      << "n_bins " << g.n_bins << "\n"
      << "r_min " << g.r_min << "\n"
      << "r_max " << g.r_max << "\n"
      << "w_theta " << g.w_theta << "\n"
      << "w_phi " << g.w_phi << "\n"
      << "rot " << p.rotation.x() << " " << p.rotation.y() << " " << p.rotation.z() << "\n"
      << "trans " << p.translation.x() << " " << p.translation.y() << " " << p.translation.z() << "\n"
      << "depth " << p.depth << "\n"
      << "pitch " << p.pitch << "\n";
}

}  // namespace

void save_image(const BeamBinImage& img, const std::string& path_img,
                const std::string& path_meta) {
  std::ofstream raw(path_img, std::ios::binary);
  if (!raw) throw Error(ErrorCode::IoError, "cannot write " + path_img);
  raw.write(reinterpret_cast<const char*>(img.intensities.data()),
            static_cast<std::streamsize>(img.intensities.size() * sizeof(float)));
  std::ofstream meta(path_meta);
  if (!meta) throw Error(ErrorCode::IoError, "cannot write " + path_meta);
  write_meta(meta, img.geom, img.pose);
}

BeamBinImage load_image(const std::string& path_img, const std::string& path_meta) {
  std::ifstream meta(path_meta);
  if (!meta) throw Error(ErrorCode::IoError, "cannot open " + path_meta);
  SonarGeometry g;
  SonarPose p;
  std::string line;
  while (std::getline(meta, line)) {
    std::istringstream ss(line);
    std::string key;
    ss >> key;
    if (key == "n_beams") ss >> g.n_beams;
    else if (key == "n_bins") ss >> g.n_bins;
    else if (key == "r_min") ss >> g.r_min;
    else if (key == "r_max") ss >> g.r_max;
    else if (key == "w_theta") ss >> g.w_theta;
    else if (key == "w_phi") ss >> g.w_phi;
    else if (key == "rot") ss >> p.rotation.x() >> p.rotation.y() >> p.rotation.z();
    else if (key == "trans") ss >> p.translation.x() >> p.translation.y() >> p.translation.z();
    else if (key == "depth") ss >> p.depth;
    else if (key == "pitch") ss >> p.pitch;
  }
  BeamBinImage img(g, p);
  std::ifstream raw(path_img, std::ios::binary);
  if (!raw) throw Error(ErrorCode::IoError, "cannot open " + path_img);
  raw.read(reinterpret_cast<char*>(img.intensities.data()),
           static_cast<std::streamsize>(img.intensities.size() * sizeof(float)));
  if (static_cast<size_t>(raw.gcount()) != img.intensities.size() * sizeof(float))
    throw Error(ErrorCode::IoError, "short read (geometry mismatch?): " + path_img);
  return img;
}

void save_masks(const ComponentMasks& m, const std::string& path) {
  std::ofstream raw(path, std::ios::binary);
  if (!raw) throw Error(ErrorCode::IoError, "cannot write " + path);
  raw.write(reinterpret_cast<const char*>(m.labels.data()),
            static_cast<std::streamsize>(m.labels.size()));
}

ComponentMasks load_masks(const SonarGeometry& g, const std::string& path) {
  ComponentMasks m(g);
  std::ifstream raw(path, std::ios::binary);
  if (!raw) throw Error(ErrorCode::IoError, "cannot open " + path);
  raw.read(reinterpret_cast<char*>(m.labels.data()), static_cast<std::streamsize>(m.labels.size()));
  if (static_cast<size_t>(raw.gcount()) != m.labels.size())
    throw Error(ErrorCode::IoError, "short read: " + path);
  return m;
}

}  // namespace fss
