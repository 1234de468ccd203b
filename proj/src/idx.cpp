#include "semcert/idx.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "semcert/errors.hpp"

namespace semcert {
namespace {

constexpr std::uint32_t kImagesMagic3 = 0x00000803;
constexpr std::uint32_t kImagesMagic4 = 0x00000804;
constexpr std::uint32_t kLabelsMagic = 0x00000801;

std::vector<unsigned char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(const std::vector<unsigned char>& bytes, std::size_t offset,
                        const std::filesystem::path& path) {
  if (offset + 4 > bytes.size()) throw FormatError(path.string() + ": truncated IDX header");
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

void write_be32(std::ofstream& out, std::uint32_t v) {
  const std::array<char, 4> b = {static_cast<char>((v >> 24) & 0xff), static_cast<char>((v >> 16) & 0xff),
                                 static_cast<char>((v >> 8) & 0xff), static_cast<char>(v & 0xff)};
  out.write(b.data(), b.size());
}

}  // namespace

LabeledDataset load_idx(const std::filesystem::path& images_path,
                        const std::filesystem::path& labels_path, std::optional<int> num_classes) {
  const auto img = read_file(images_path);
  const auto lab = read_file(labels_path);

  const std::uint32_t img_magic = read_be32(img, 0, images_path);
  if (img_magic != kImagesMagic3 && img_magic != kImagesMagic4) {
    throw FormatError(images_path.string() + ": bad image magic");
  }
  const std::uint32_t lab_magic = read_be32(lab, 0, labels_path);
  if (lab_magic != kLabelsMagic) throw FormatError(labels_path.string() + ": bad label magic");

  const std::size_t count = read_be32(img, 4, images_path);
  const std::size_t height = read_be32(img, 8, images_path);
  const std::size_t width = read_be32(img, 12, images_path);
  std::size_t channels = 1;
  std::size_t header = 16;
  if (img_magic == kImagesMagic4) {
    channels = read_be32(img, 16, images_path);
    header = 20;
  }
  if (channels != 1 && channels != 3) throw FormatError(images_path.string() + ": channels must be 1 or 3");

  const std::size_t label_count = read_be32(lab, 4, labels_path);
  if (label_count != count) {
    throw ConsistencyError("image count " + std::to_string(count) + " != label count " +
                           std::to_string(label_count));
  }
  const std::size_t pixels = height * width * channels;
  if (img.size() < header + count * pixels) {
    throw ConsistencyError(images_path.string() + ": body shorter than declared " +
                           std::to_string(count) + " images");
  }
  if (lab.size() < 8 + count) {
    throw ConsistencyError(labels_path.string() + ": body shorter than declared " +
                           std::to_string(count) + " labels");
  }

  LabeledDataset ds;
  ds.images.reserve(count);
  ds.labels.reserve(count);
  int max_label = -1;
  for (std::size_t i = 0; i < count; ++i) {
    std::vector<double> data(pixels);
    const unsigned char* src = img.data() + header + i * pixels;
    for (std::size_t k = 0; k < pixels; ++k) data[k] = src[k] / 255.0;
    ds.images.emplace_back(height, width, channels, std::move(data));
    const int label = lab[8 + i];
    ds.labels.push_back(label);
    max_label = std::max(max_label, label);
  }
  ds.num_classes = num_classes.value_or(max_label + 1);
  ds.validate();
  return ds;
}

void save_idx(const LabeledDataset& dataset, const std::filesystem::path& images_path,
              const std::filesystem::path& labels_path) {
  dataset.validate();
  const ImageTensor& first = dataset.images.front();
  std::ofstream img(images_path, std::ios::binary);
  std::ofstream lab(labels_path, std::ios::binary);
  if (!img) throw IoError("cannot write " + images_path.string());
  if (!lab) throw IoError("cannot write " + labels_path.string());

  const bool color = first.channels() != 1;
  write_be32(img, color ? kImagesMagic4 : kImagesMagic3);
  write_be32(img, static_cast<std::uint32_t>(dataset.size()));
  write_be32(img, static_cast<std::uint32_t>(first.height()));
  write_be32(img, static_cast<std::uint32_t>(first.width()));
  if (color) write_be32(img, static_cast<std::uint32_t>(first.channels()));
  for (const auto& image : dataset.images) {
    std::vector<char> bytes(image.size());
    auto v = image.values();
    for (std::size_t k = 0; k < v.size(); ++k) {
      bytes[k] = static_cast<char>(static_cast<unsigned char>(std::lround(std::clamp(v[k], 0.0, 1.0) * 255.0)));
    }
    img.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }

  write_be32(lab, kLabelsMagic);
  write_be32(lab, static_cast<std::uint32_t>(dataset.size()));
  for (int label : dataset.labels) lab.put(static_cast<char>(label));
  if (!img || !lab) throw IoError("write failed for IDX output");
}

}  // namespace semcert
