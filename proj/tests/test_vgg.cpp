#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <unistd.h>

#include "dhff/rng.hpp"
#include "dhff/vgg.hpp"

using namespace dhff;
namespace fs = std::filesystem;

namespace {

template <class T>
Tensor<T> random_tensor(int c, int h, int w, std::uint64_t seed,
                        double scale = 1.0) {
  Tensor<T> t(c, h, w);
  RngStream rng(seed);
  for (auto& v : t.v) v = static_cast<T>(rng.next_unit() * scale);
  return t;
}

std::array<double, 16> ones() {
  std::array<double, 16> a;
  a.fill(1.0);
  return a;
}

}  // namespace

TEST_CASE("conv2d with a center-one identity kernel reproduces the input") {
  Tensor<float> in = random_tensor<float>(1, 5, 6, 42);
  float kernel[9] = {0, 0, 0, 0, 1, 0, 0, 0, 0};
  float bias[1] = {0};
  Tensor<float> out;
  conv2d(in, kernel, bias, 1, out);
  REQUIRE(out.same_shape(in));
  for (std::size_t i = 0; i < in.size(); ++i) CHECK(out.v[i] == in.v[i]);
}

TEST_CASE("conv2d of all-ones input with all-ones kernel") {
  Tensor<float> in(1, 3, 3);
  for (auto& v : in.v) v = 1.0f;
  float kernel[9] = {1, 1, 1, 1, 1, 1, 1, 1, 1};
  float bias[1] = {0};
  Tensor<float> out;
  conv2d(in, kernel, bias, 1, out);
  CHECK(out.at(0, 1, 1) == 9.0f);  // center sees the full window
  CHECK(out.at(0, 0, 1) == 6.0f);  // edge-center loses one row
  CHECK(out.at(0, 0, 0) == 4.0f);  // corner keeps a 2x2 patch
}

TEST_CASE("conv2d with zero kernel yields the bias") {
  Tensor<float> in = random_tensor<float>(2, 4, 4, 1);
  std::vector<float> kernel(2 * 2 * 9, 0.0f);
  float bias[2] = {0.75f, -1.5f};
  Tensor<float> out;
  conv2d(in, kernel.data(), bias, 2, out);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) {
      CHECK(out.at(0, y, x) == 0.75f);
      CHECK(out.at(1, y, x) == -1.5f);
    }
}

TEST_CASE("max pooling of [1,2;3,4] picks 4 at the bottom-right") {
  Tensor<float> in(1, 2, 2);
  in.v = {1, 2, 3, 4};
  Tensor<float> out;
  std::vector<std::uint32_t> argmax;
  pool2x2(in, PoolingMode::Max, out, &argmax);
  CHECK(out.v[0] == 4.0f);
  CHECK(argmax[0] == 3);  // flat plane index of (1,1)
}

TEST_CASE("average pooling of [1,2;3,4] is 2.5") {
  Tensor<float> in(1, 2, 2);
  in.v = {1, 2, 3, 4};
  Tensor<float> out;
  pool2x2(in, PoolingMode::Average, out, nullptr);
  CHECK(out.v[0] == 2.5f);
}

TEST_CASE("pooling a constant image is mode-invariant") {
  Tensor<float> in(2, 4, 6);
  for (auto& v : in.v) v = 0.6f;
  Tensor<float> mx, av;
  std::vector<std::uint32_t> am;
  pool2x2(in, PoolingMode::Max, mx, &am);
  pool2x2(in, PoolingMode::Average, av, nullptr);
  REQUIRE(mx.same_shape(av));
  for (std::size_t i = 0; i < mx.size(); ++i) {
    CHECK(mx.v[i] == 0.6f);
    CHECK(av.v[i] == 0.6f);
  }
}

TEST_CASE("max pooling ties break to the first element in row-major order") {
  Tensor<float> in(1, 2, 2);
  in.v = {5, 5, 5, 5};
  Tensor<float> out;
  std::vector<std::uint32_t> argmax;
  pool2x2(in, PoolingMode::Max, out, &argmax);
  CHECK(argmax[0] == 0);
}

TEST_CASE("forward with zero weights produces all-zero caches") {
  VggWeights w = random_base_weights(1);
  for (auto& l : w.layers) {
    std::fill(l.kernel.begin(), l.kernel.end(), 0.0f);
    std::fill(l.bias.begin(), l.bias.end(), 0.0f);
  }
  const Tensor<float> img = random_tensor<float>(3, 32, 32, 2);
  const ActivationCache<float> cache =
      vgg_forward(w, img, PoolingMode::Max);
  for (const auto& t : cache.conv_out)
    for (float v : t.v) REQUIRE(v == 0.0f);
  for (const auto& t : cache.pool_out)
    for (float v : t.v) REQUIRE(v == 0.0f);
}

TEST_CASE("32x32 input reaches a 1x1x512 pool5 output") {
  const VggWeights w = random_base_weights(3);
  const Tensor<float> img = random_tensor<float>(3, 32, 32, 4);
  const ActivationCache<float> cache =
      vgg_forward(w, img, PoolingMode::Max);
  CHECK(cache.pool_out[4].c == 512);
  CHECK(cache.pool_out[4].h == 1);
  CHECK(cache.pool_out[4].w == 1);
  for (int s = 0; s < 5; ++s) CHECK(cache.pooled[s]);
}

TEST_CASE("doubling the layer-1 kernel doubles its pre-activation output") {
  VggWeights w = random_base_weights(5);
  const Tensor<float> img = random_tensor<float>(3, 32, 32, 6);
  const ActivationCache<float> c1 = vgg_forward(w, img, PoolingMode::Max);
  for (float& v : w.layers[0].kernel) v *= 2.0f;
  const ActivationCache<float> c2 = vgg_forward(w, img, PoolingMode::Max);
  for (std::size_t i = 0; i < c1.conv_out[0].size(); ++i)
    CHECK(c2.conv_out[0].v[i] ==
          doctest::Approx(2.0f * c1.conv_out[0].v[i]).epsilon(1e-6));
}

TEST_CASE("forward rejects bad inputs") {
  const VggWeights w = random_base_weights(7);
  CHECK_THROWS(vgg_forward(w, Tensor<float>(1, 32, 32), PoolingMode::Max));
  CHECK_THROWS(vgg_forward(w, Tensor<float>(3, 2, 32), PoolingMode::Max));
}

TEST_CASE("forward determinism: identical inputs give bit-identical caches") {
  const VggWeights w = random_base_weights(8);
  const Tensor<float> img = random_tensor<float>(3, 32, 32, 9);
  const ActivationCache<float> a = vgg_forward(w, img, PoolingMode::Max);
  const ActivationCache<float> b = vgg_forward(w, img, PoolingMode::Max);
  for (int l = 0; l < kVggLayerCount; ++l)
    REQUIRE(a.conv_out[l].v == b.conv_out[l].v);
  for (int s = 0; s < 5; ++s) REQUIRE(a.pool_out[s].v == b.pool_out[s].v);
}

namespace {

// scalar objective <content_seed, conv16> + sum_s <style_seed_s, pool_s>
double seeded_sum(const PreparedWeights<double>& w, const Tensor<double>& img,
                  PoolingMode mode, const Tensor<double>& content_seed,
                  const std::array<Tensor<double>, 5>& style_seeds) {
  const ActivationCache<double> cache = vgg_forward(w, img, mode);
  double s = 0.0;
  if (!content_seed.empty())
    for (std::size_t i = 0; i < content_seed.size(); ++i)
      s += content_seed.v[i] * cache.conv_out[15].v[i];
  for (int b = 0; b < 5; ++b)
    if (!style_seeds[b].empty())
      for (std::size_t i = 0; i < style_seeds[b].size(); ++i)
        s += style_seeds[b].v[i] * cache.pool_out[b].v[i];
  return s;
}

void fd_check(PoolingMode mode, bool with_content, bool with_style) {
  VggWeights wsrc = random_base_weights(77);
  // small weights keep the activations tame on the deep layers
  for (auto& l : wsrc.layers)
    for (float& v : l.kernel) v *= 0.6f;
  const PreparedWeights<double> w = prepare_weights<double>(wsrc);
  const Tensor<double> img = random_tensor<double>(3, 8, 8, 78);

  const ActivationCache<double> cache = vgg_forward(w, img, mode);
  RngStream rng(79);
  Tensor<double> content_seed;
  if (with_content) {
    const Tensor<double>& ref = cache.conv_out[15];
    content_seed = Tensor<double>(ref.c, ref.h, ref.w);
    for (auto& v : content_seed.v) v = rng.next_gaussian(0.0, 1.0);
  }
  std::array<Tensor<double>, 5> style_seeds;
  if (with_style)
    for (int b = 0; b < 5; ++b) {
      const Tensor<double>& ref = cache.pool_out[b];
      style_seeds[b] = Tensor<double>(ref.c, ref.h, ref.w);
      for (auto& v : style_seeds[b].v) v = rng.next_gaussian(0.0, 1.0);
    }

  const Tensor<double> g =
      vgg_backward_to_input(w, cache, 16, content_seed, style_seeds);

  const double h = 1e-4;
  double num = 0.0, den = 0.0;
  Tensor<double> probe = img;
  for (std::size_t i = 0; i < img.size(); ++i) {
    probe.v[i] = img.v[i] + h;
    const double fp = seeded_sum(w, probe, mode, content_seed, style_seeds);
    probe.v[i] = img.v[i] - h;
    const double fm = seeded_sum(w, probe, mode, content_seed, style_seeds);
    probe.v[i] = img.v[i];
    const double fd = (fp - fm) / (2.0 * h);
    num += (g.v[i] - fd) * (g.v[i] - fd);
    den += fd * fd;
  }
  REQUIRE(den > 0.0);
  CHECK(std::sqrt(num / den) < 1e-4);
}

}  // namespace

TEST_CASE("backward matches central finite differences (max pooling)") {
  fd_check(PoolingMode::Max, true, true);
  fd_check(PoolingMode::Max, true, false);
  fd_check(PoolingMode::Max, false, true);
}

TEST_CASE("backward matches central finite differences (average pooling)") {
  fd_check(PoolingMode::Average, true, true);
}

TEST_CASE("backward with all-zero seeds returns a zero gradient") {
  const VggWeights w = random_base_weights(10);
  const Tensor<float> img = random_tensor<float>(3, 16, 16, 11);
  const ActivationCache<float> cache =
      vgg_forward(w, img, PoolingMode::Max);
  const Tensor<float> g = vgg_backward_to_input(
      w, cache, 16, Tensor<float>(), std::array<Tensor<float>, 5>{});
  for (float v : g.v) REQUIRE(v == 0.0f);
}

TEST_CASE("backward is additive in the injected seeds") {
  const VggWeights w = random_base_weights(12);
  const Tensor<double> img = random_tensor<double>(3, 16, 16, 13);
  const ActivationCache<double> cache =
      vgg_forward(w, img, PoolingMode::Max);

  RngStream rng(14);
  auto make_seeds = [&](Tensor<double>& cs,
                        std::array<Tensor<double>, 5>& ss) {
    const Tensor<double>& ref = cache.conv_out[15];
    cs = Tensor<double>(ref.c, ref.h, ref.w);
    for (auto& v : cs.v) v = rng.next_gaussian(0.0, 1.0);
    for (int b = 0; b < 5; ++b) {
      const Tensor<double>& r = cache.pool_out[b];
      ss[b] = Tensor<double>(r.c, r.h, r.w);
      for (auto& v : ss[b].v) v = rng.next_gaussian(0.0, 1.0);
    }
  };
  Tensor<double> ca, cb;
  std::array<Tensor<double>, 5> sa, sb;
  make_seeds(ca, sa);
  make_seeds(cb, sb);

  Tensor<double> cab = ca;
  std::array<Tensor<double>, 5> sab = sa;
  for (std::size_t i = 0; i < cab.size(); ++i) cab.v[i] += cb.v[i];
  for (int b = 0; b < 5; ++b)
    for (std::size_t i = 0; i < sab[b].size(); ++i) sab[b].v[i] += sb[b].v[i];

  const Tensor<double> ga = vgg_backward_to_input(w, cache, 16, ca, sa);
  const Tensor<double> gb = vgg_backward_to_input(w, cache, 16, cb, sb);
  const Tensor<double> gab = vgg_backward_to_input(w, cache, 16, cab, sab);
  for (std::size_t i = 0; i < ga.size(); ++i)
    CHECK(gab.v[i] == doctest::Approx(ga.v[i] + gb.v[i]).epsilon(1e-10));
}

TEST_CASE("randomize_weights with alpha 0 returns the base bit-exactly") {
  const VggWeights base = random_base_weights(20);
  std::array<double, 16> alpha{};
  const VggWeights out = randomize_weights(base, alpha, 5, 1);
  for (int i = 0; i < kVggLayerCount; ++i) {
    CHECK(out.layers[i].kernel == base.layers[i].kernel);
    CHECK(out.layers[i].bias == base.layers[i].bias);
  }
}

TEST_CASE("randomize_weights is deterministic in (seed, k)") {
  const VggWeights base = random_base_weights(21);
  const VggWeights a = randomize_weights(base, ones(), 9, 3);
  const VggWeights b = randomize_weights(base, ones(), 9, 3);
  const VggWeights c = randomize_weights(base, ones(), 9, 4);
  for (int i = 0; i < kVggLayerCount; ++i)
    CHECK(a.layers[i].kernel == b.layers[i].kernel);
  CHECK(a.layers[0].kernel != c.layers[0].kernel);
}

TEST_CASE("randomize_weights never touches the biases") {
  VggWeights base = random_base_weights(22);
  RngStream rng(23);
  for (auto& l : base.layers)
    for (float& b : l.bias) b = float(rng.next_unit());
  const VggWeights out = randomize_weights(base, ones(), 1, 2);
  for (int i = 0; i < kVggLayerCount; ++i)
    CHECK(out.layers[i].bias == base.layers[i].bias);
}

TEST_CASE("randomized perturbation matches the base-layer variance") {
  const VggWeights base = random_base_weights(24);
  const VggWeights out = randomize_weights(base, ones(), 7, 1);
  // layer 2 has 64*64*9 = 36864 weights, comfortably above 10k
  for (int li : {1, 4, 10}) {
    const auto& kb = base.layers[li].kernel;
    const auto& ko = out.layers[li].kernel;
    const std::size_t n = kb.size();
    REQUIRE(n >= 10000);

    double mean0 = 0.0;
    for (float v : kb) mean0 += v;
    mean0 /= double(n);
    double var0 = 0.0;
    for (float v : kb) var0 += (v - mean0) * (v - mean0);
    var0 /= double(n - 1);

    double dsum = 0.0, dsq = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double d = double(ko[j]) - double(kb[j]);
      dsum += d;
      dsq += d * d;
    }
    const double dmean = dsum / double(n);
    const double dvar = dsq / double(n) - dmean * dmean;
    CHECK(std::abs(dmean) <= 3.0 * std::sqrt(var0 / double(n)));
    CHECK(dvar == doctest::Approx(var0).epsilon(0.10));
  }
}

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("dhff_vgg_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const {
    return (path / name).string();
  }
  static inline int counter = 0;
};

}  // namespace

TEST_CASE("weight file round-trip is bit-identical") {
  TempDir tmp;
  const VggWeights w = random_base_weights(30);
  const std::string p = tmp.file("w.dhffw");
  save_weights(w, p);
  const VggWeights back = load_weights(p);
  for (int i = 0; i < kVggLayerCount; ++i) {
    CHECK(back.layers[i].kernel == w.layers[i].kernel);
    CHECK(back.layers[i].bias == w.layers[i].bias);
  }
  // byte-level: saving the loaded weights reproduces the file
  const std::string p2 = tmp.file("w2.dhffw");
  save_weights(back, p2);
  std::ifstream f1(p, std::ios::binary), f2(p2, std::ios::binary);
  std::vector<char> b1{std::istreambuf_iterator<char>(f1), {}};
  std::vector<char> b2{std::istreambuf_iterator<char>(f2), {}};
  CHECK(b1 == b2);
}

TEST_CASE("weight file with a wrong magic is rejected") {
  TempDir tmp;
  const std::string p = tmp.file("bad.dhffw");
  std::ofstream out(p, std::ios::binary);
  out << "DHFFW2\n";
  out.close();
  CHECK_THROWS_AS(load_weights(p), std::runtime_error);
}

TEST_CASE("weight file with 15 layer records is rejected") {
  TempDir tmp;
  const VggWeights w = random_base_weights(31);
  const std::string p = tmp.file("short.dhffw");
  save_weights(w, p);
  // patch the layer count to 15
  std::fstream f(p, std::ios::binary | std::ios::in | std::ios::out);
  f.seekp(7);
  const unsigned char fifteen[4] = {15, 0, 0, 0};
  f.write(reinterpret_cast<const char*>(fifteen), 4);
  f.close();
  CHECK_THROWS_AS(load_weights(p), std::runtime_error);
}

TEST_CASE("truncated weight file is rejected") {
  TempDir tmp;
  const VggWeights w = random_base_weights(32);
  const std::string p = tmp.file("trunc.dhffw");
  save_weights(w, p);
  const auto sz = fs::file_size(p);
  fs::resize_file(p, sz / 2);
  CHECK_THROWS_AS(load_weights(p), std::runtime_error);
}

TEST_CASE("random_base_weights is deterministic with zero biases") {
  const VggWeights a = random_base_weights(40);
  const VggWeights b = random_base_weights(40);
  for (int i = 0; i < kVggLayerCount; ++i) {
    CHECK(a.layers[i].kernel == b.layers[i].kernel);
    for (float v : a.layers[i].bias) CHECK(v == 0.0f);
  }
}

TEST_CASE("random_base_weights layer-1 std is close to sqrt(2/27)") {
  const VggWeights w = random_base_weights(41);
  const auto& k = w.layers[0].kernel;
  REQUIRE(k.size() == 64 * 3 * 9);
  double sum = 0.0, sq = 0.0;
  for (float v : k) {
    sum += v;
    sq += double(v) * v;
  }
  const double mean = sum / double(k.size());
  const double sd = std::sqrt(sq / double(k.size()) - mean * mean);
  CHECK(sd == doctest::Approx(std::sqrt(2.0 / 27.0)).epsilon(0.10));
}
