#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "doctest.h"
#include "semcert/csv.hpp"
#include "semcert/errors.hpp"
#include "semcert/idx.hpp"
#include "semcert/image.hpp"

using namespace semcert;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / ("semcert_io_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void put_be32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) out.push_back(static_cast<unsigned char>((v >> shift) & 0xff));
}

void write_bytes(const fs::path& path, const std::vector<unsigned char>& bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

std::vector<unsigned char> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// 4 images of 2x2 with a known byte pattern.
void write_fixture(const fs::path& images, const fs::path& labels, std::vector<unsigned char>& pixel_bytes) {
  pixel_bytes = {0, 128, 255, 7, 1, 2, 3, 4, 200, 100, 50, 25, 9, 8, 7, 6};
  std::vector<unsigned char> img;
  put_be32(img, 0x803);
  put_be32(img, 4);
  put_be32(img, 2);
  put_be32(img, 2);
  img.insert(img.end(), pixel_bytes.begin(), pixel_bytes.end());
  write_bytes(images, img);
  std::vector<unsigned char> lab;
  put_be32(lab, 0x801);
  put_be32(lab, 4);
  for (unsigned char l : {0, 1, 2, 1}) lab.push_back(l);
  write_bytes(labels, lab);
}

}  // namespace

TEST_CASE("image tensor shape and clamping") {
  ImageTensor img(2, 3, 1, 0.25);
  CHECK(img.size() == 6);
  img(1, 2) = 1.5;
  img(0, 0) = -0.5;
  const ImageTensor c = img.clamped();
  CHECK(c(1, 2) == 1.0);
  CHECK(c(0, 0) == 0.0);
  CHECK(c(0, 1) == 0.25);
  CHECK_THROWS_AS(ImageTensor(2, 2, 1, std::vector<double>(3, 0.0)), ConsistencyError);
  CHECK(max_abs_diff(img, c) == doctest::Approx(0.5));
}

TEST_CASE("load_idx scales bytes by 1/255") {
  const fs::path dir = scratch_dir("load");
  std::vector<unsigned char> bytes;
  write_fixture(dir / "img.idx", dir / "lab.idx", bytes);
  const LabeledDataset ds = load_idx(dir / "img.idx", dir / "lab.idx");
  REQUIRE(ds.size() == 4);
  CHECK(ds.num_classes == 3);
  CHECK(ds.images[0].height() == 2);
  CHECK(ds.images[0].width() == 2);
  CHECK(ds.images[0](0, 0) == 0.0);
  CHECK(ds.images[0](0, 1) == 128.0 / 255.0);
  CHECK(ds.images[0](1, 0) == 1.0);
  CHECK(ds.labels == std::vector<int>{0, 1, 2, 1});
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (std::size_t k = 0; k < 4; ++k) {
      CHECK(std::lround(ds.images[i].values()[k] * 255.0) == bytes[i * 4 + k]);
    }
  }
}

TEST_CASE("idx round trip reproduces the original bytes") {
  const fs::path dir = scratch_dir("roundtrip");
  std::vector<unsigned char> bytes;
  write_fixture(dir / "img.idx", dir / "lab.idx", bytes);
  const LabeledDataset ds = load_idx(dir / "img.idx", dir / "lab.idx");
  save_idx(ds, dir / "img2.idx", dir / "lab2.idx");
  CHECK(read_bytes(dir / "img.idx") == read_bytes(dir / "img2.idx"));
  CHECK(read_bytes(dir / "lab.idx") == read_bytes(dir / "lab2.idx"));
}

TEST_CASE("malformed idx input") {
  const fs::path dir = scratch_dir("bad");
  std::vector<unsigned char> bytes;
  write_fixture(dir / "img.idx", dir / "lab.idx", bytes);

  std::vector<unsigned char> empty_body;
  put_be32(empty_body, 0x803);
  put_be32(empty_body, 4);
  put_be32(empty_body, 2);
  put_be32(empty_body, 2);
  write_bytes(dir / "empty.idx", empty_body);
  CHECK_THROWS_AS(load_idx(dir / "empty.idx", dir / "lab.idx"), ConsistencyError);

  std::vector<unsigned char> bad_magic = read_bytes(dir / "img.idx");
  bad_magic[3] = 0x02;
  write_bytes(dir / "magic.idx", bad_magic);
  CHECK_THROWS_AS(load_idx(dir / "magic.idx", dir / "lab.idx"), FormatError);

  std::vector<unsigned char> lab;
  put_be32(lab, 0x801);
  put_be32(lab, 3);
  for (unsigned char l : {0, 1, 2}) lab.push_back(l);
  write_bytes(dir / "lab3.idx", lab);
  CHECK_THROWS_AS(load_idx(dir / "img.idx", dir / "lab3.idx"), ConsistencyError);
}

TEST_CASE("header fields of a larger file match an independent byte decode") {
  const fs::path dir = scratch_dir("large");
  LabeledDataset ds;
  ds.num_classes = 10;
  for (int i = 0; i < 50; ++i) {
    std::vector<double> px(28 * 28);
    for (std::size_t k = 0; k < px.size(); ++k) px[k] = static_cast<double>((i * 31 + k) % 256) / 255.0;
    ds.images.emplace_back(28, 28, 1, std::move(px));
    ds.labels.push_back(i % 10);
  }
  save_idx(ds, dir / "img.idx", dir / "lab.idx");
  const auto raw = read_bytes(dir / "img.idx");
  auto be32 = [&](std::size_t off) {
    return (std::uint32_t{raw[off]} << 24) | (std::uint32_t{raw[off + 1]} << 16) | (std::uint32_t{raw[off + 2]} << 8) |
           raw[off + 3];
  };
  CHECK(be32(0) == 0x803);
  CHECK(be32(4) == 50);
  CHECK(be32(8) == 28);
  CHECK(be32(12) == 28);
  CHECK(raw.size() == 16 + 50 * 28 * 28);
  const LabeledDataset back = load_idx(dir / "img.idx", dir / "lab.idx");
  CHECK(back.size() == 50);
  CHECK(back.images[7] == ds.images[7]);
}

TEST_CASE("export_grid_csv") {
  const fs::path dir = scratch_dir("csv");
  std::vector<GridRow> one = {{{0.0, 0.0}, 1.0}};
  export_grid_csv(one, dir / "one.csv");
  CHECK(read_text(dir / "one.csv") == "beta_1,beta_2,value\n0,0,1\n");

  export_grid_csv(std::vector<GridRow>{}, dir / "empty.csv");
  CHECK(read_text(dir / "empty.csv") == "value\n");

  std::vector<GridRow> grid;
  for (int i = 0; i < 11; ++i) {
    for (int j = 0; j < 11; ++j) grid.push_back({{0.8 + 0.045 * i, -0.1 + 0.02 * j}, 0.5});
  }
  export_grid_csv(grid, dir / "grid.csv");
  const std::string text = read_text(dir / "grid.csv");
  CHECK(std::count(text.begin(), text.end(), '\n') == 122);

  std::vector<GridRow> ragged = {{{0.0}, 1.0}, {{0.0, 1.0}, 1.0}};
  CHECK_THROWS_AS(export_grid_csv(ragged, dir / "ragged.csv"), ContractError);
  CHECK_THROWS_AS(export_grid_csv(one, dir / "missing" / "sub" / "x.csv"), IoError);
}

TEST_CASE("full precision formatting round-trips") {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-17, 123456.789}) CHECK(std::stod(format_double(v)) == v);
}
