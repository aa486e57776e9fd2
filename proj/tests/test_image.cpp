#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "dhff/image.hpp"
#include "dhff/rng.hpp"

using namespace dhff;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("dhff_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const {
    return (path / name).string();
  }
  static inline int counter = 0;
};

void write_bytes(const std::string& path, const std::vector<unsigned char>& b) {
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(b.data()),
            static_cast<std::streamsize>(b.size()));
}

}  // namespace

TEST_CASE("load P5 from a hand-encoded 15-byte file") {
  TempDir tmp;
  const std::string p = tmp.file("a.pgm");
  write_bytes(p, {'P', '5', ' ', '2', ' ', '2', ' ', '2', '5', '5', '\n',
                  0, 255, 128, 64});
  const Image img = load_pnm(p);
  CHECK(img.height == 2);
  CHECK(img.width == 2);
  CHECK(img.channels == 1);
  CHECK(img.data[0] == 0.0f);
  CHECK(img.data[1] == 1.0f);
  CHECK(img.data[2] == doctest::Approx(128.0f / 255.0f));
  CHECK(img.data[3] == doctest::Approx(64.0f / 255.0f));
}

TEST_CASE("load P6 single white pixel") {
  TempDir tmp;
  const std::string p = tmp.file("w.ppm");
  write_bytes(p, {'P', '6', '\n', '1', ' ', '1', '\n', '2', '5', '5', '\n',
                  255, 255, 255});
  const Image img = load_pnm(p);
  CHECK(img.channels == 3);
  CHECK(img.at(0, 0, 0) == 1.0f);
  CHECK(img.at(0, 0, 1) == 1.0f);
  CHECK(img.at(0, 0, 2) == 1.0f);
}

TEST_CASE("unsupported magic P4 is a magic error") {
  TempDir tmp;
  const std::string p = tmp.file("b.pbm");
  write_bytes(p, {'P', '4', '\n', '1', ' ', '1', '\n', 0});
  try {
    load_pnm(p);
    FAIL("expected PnmError");
  } catch (const PnmError& e) {
    CHECK(e.kind() == PnmErrorKind::BadMagic);
  }
}

TEST_CASE("maxval other than 255 is rejected distinctly") {
  TempDir tmp;
  const std::string p = tmp.file("m.pgm");
  write_bytes(p, {'P', '5', ' ', '1', ' ', '1', ' ', '6', '5', '\n', 0});
  try {
    load_pnm(p);
    FAIL("expected PnmError");
  } catch (const PnmError& e) {
    CHECK(e.kind() == PnmErrorKind::BadMaxval);
  }
}

TEST_CASE("truncated payload is rejected distinctly") {
  TempDir tmp;
  const std::string p = tmp.file("t.pgm");
  write_bytes(p, {'P', '5', ' ', '2', ' ', '2', ' ', '2', '5', '5', '\n',
                  1, 2, 3});
  try {
    load_pnm(p);
    FAIL("expected PnmError");
  } catch (const PnmError& e) {
    CHECK(e.kind() == PnmErrorKind::Truncated);
  }
}

TEST_CASE("non-numeric header token is a header error") {
  TempDir tmp;
  const std::string p = tmp.file("h.pgm");
  write_bytes(p, {'P', '5', ' ', 'x', ' ', '2', ' ', '2', '5', '5', '\n', 0});
  try {
    load_pnm(p);
    FAIL("expected PnmError");
  } catch (const PnmError& e) {
    CHECK(e.kind() == PnmErrorKind::BadHeader);
  }
}

TEST_CASE("save rounds half away from zero") {
  TempDir tmp;
  Image img(1, 1, 1);
  img.data[0] = 0.5f;  // 127.5 -> 128
  const std::string p = tmp.file("r.pgm");
  save_pnm(img, p);
  std::ifstream in(p, std::ios::binary);
  std::vector<unsigned char> buf{std::istreambuf_iterator<char>(in),
                                 std::istreambuf_iterator<char>()};
  CHECK(buf.back() == 128);
}

TEST_CASE("3-channel image writes a P6 magic") {
  TempDir tmp;
  Image img(1, 2, 3, 0.25f);
  const std::string p = tmp.file("m.ppm");
  save_pnm(img, p);
  std::ifstream in(p, std::ios::binary);
  char a, b;
  in.get(a).get(b);
  CHECK(a == 'P');
  CHECK(b == '6');
}

TEST_CASE("save/load round-trip is exact on quantized images") {
  TempDir tmp;
  RngStream rng(7);
  for (int trial = 0; trial < 5; ++trial) {
    const int h = 3 + int(rng.next_below(6));
    const int w = 3 + int(rng.next_below(6));
    const int c = (rng.next_u64() & 1) ? 3 : 1;
    Image img(h, w, c);
    for (float& v : img.data)
      v = float(rng.next_below(256)) / 255.0f;  // quantized values
    const std::string p = tmp.file("rt.pnm");
    save_pnm(img, p);
    const Image back = load_pnm(p);
    REQUIRE(back.same_shape(img));
    for (std::size_t i = 0; i < img.data.size(); ++i)
      CHECK(back.data[i] == img.data[i]);
  }
}

TEST_CASE("bilinear resize of a constant image is constant") {
  Image img(4, 5, 3, 0.37f);
  const Image out = bilinear_resize(img, 9, 3);
  CHECK(out.height == 9);
  CHECK(out.width == 3);
  for (float v : out.data) CHECK(v == doctest::Approx(0.37f).epsilon(1e-6));
}

TEST_CASE("align-corners 2x2 to 2x3 creates an averaged middle column") {
  Image img(2, 2, 1);
  img.at(0, 0, 0) = 0.0f; img.at(0, 1, 0) = 1.0f;
  img.at(1, 0, 0) = 0.0f; img.at(1, 1, 0) = 1.0f;
  const Image out = bilinear_resize(img, 2, 3);
  for (int y = 0; y < 2; ++y) {
    CHECK(out.at(y, 0, 0) == doctest::Approx(0.0f));
    CHECK(out.at(y, 1, 0) == doctest::Approx(0.5f));
    CHECK(out.at(y, 2, 0) == doctest::Approx(1.0f));
  }
}

TEST_CASE("resize to the same size is the identity") {
  RngStream rng(3);
  Image img(5, 7, 1);
  for (float& v : img.data) v = float(rng.next_unit());
  const Image out = bilinear_resize(img, 5, 7);
  for (std::size_t i = 0; i < img.data.size(); ++i)
    CHECK(out.data[i] == img.data[i]);
}

TEST_CASE("resize maps [0,1] into [0,1]") {
  RngStream rng(11);
  Image img(6, 6, 1);
  for (float& v : img.data) v = float(rng.next_unit());
  const Image out = bilinear_resize(img, 17, 4);
  for (float v : out.data) {
    CHECK(v >= 0.0f);
    CHECK(v <= 1.0f);
  }
}

TEST_CASE("to_rgb replicates gray and passes RGB through") {
  Image g(1, 1, 1, 0.3f);
  const Image rgb = to_rgb(g);
  CHECK(rgb.channels == 3);
  CHECK(rgb.at(0, 0, 0) == 0.3f);
  CHECK(rgb.at(0, 0, 1) == 0.3f);
  CHECK(rgb.at(0, 0, 2) == 0.3f);

  Image c(2, 2, 3, 0.8f);
  const Image same = to_rgb(c);
  CHECK(same.data == c.data);

  Image g2(2, 2, 1);
  g2.data = {0.1f, 0.2f, 0.3f, 0.4f};
  const Image r2 = to_rgb(g2);
  for (int y = 0; y < 2; ++y)
    for (int x = 0; x < 2; ++x)
      for (int ch = 0; ch < 3; ++ch)
        CHECK(r2.at(y, x, ch) == g2.at(y, x, 0));
}
