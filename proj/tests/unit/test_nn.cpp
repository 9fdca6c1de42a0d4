#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "eegvc/adam.hpp"
#include "eegvc/gradcheck.hpp"
#include "eegvc/nn.hpp"
#include "test_util.hpp"

using namespace eegvc;
using testutil::rand_tensor;

namespace {

ConvParams ones_conv(const ConvSpec& s, std::size_t cin) {
  ConvParams p;
  p.w.assign(s.kh * s.kw * cin * s.filters, 1.0);
  p.b.assign(s.filters, 0.0);
  return p;
}

}  // namespace

TEST_CASE("conv2d identity kernel passes input through") {
  Rng rng(7);
  Tensor4 x = rand_tensor(rng, 2, 3, 5, 1);
  ConvSpec s{1, 1, 1, 1, 1, Padding::kValid, Activation::none()};
  ConvParams p = ones_conv(s, 1);
  Tensor4 y = conv2d_forward(x, p, s);
  REQUIRE(y.dims == x.dims);
  CHECK(testutil::max_abs_diff(y.data, x.data) == doctest::Approx(0.0));
}

TEST_CASE("conv2d same-padding shape matches stride arithmetic") {
  Rng rng(3);
  Tensor4 x = rand_tensor(rng, 1, 4, 3000, 1);
  ConvSpec s{64, 1, 7, 1, 2, Padding::kSame, Activation::leaky_relu(0.2)};
  Rng wrng(11);
  ConvParams p = init_conv(s, 1, wrng);
  Tensor4 y = conv2d_forward(x, p, s);
  CHECK(y.dims == std::array<std::size_t, 4>{1, 4, 1500, 64});
}

TEST_CASE("conv2d valid cross-correlation by hand") {
  // row [1,2,3,4] against kernel [1,0,-1]: no flip, so [1-3, 2-4] = [-2,-2]
  Tensor4 x(1, 1, 4, 1);
  x.data = {1, 2, 3, 4};
  ConvSpec s{1, 1, 3, 1, 1, Padding::kValid, Activation::none()};
  ConvParams p;
  p.w = {1.0, 0.0, -1.0};
  p.b = {0.0};
  Tensor4 y = conv2d_forward(x, p, s);
  REQUIRE(y.size() == 2);
  CHECK(y.data[0] == doctest::Approx(-2.0));
  CHECK(y.data[1] == doctest::Approx(-2.0));
}

TEST_CASE("conv2d rejects mismatched weights with both shapes in the message") {
  Tensor4 x(1, 2, 8, 3);
  ConvSpec s{4, 1, 3, 1, 1, Padding::kValid, Activation::none()};
  ConvParams p;
  p.w.assign(1 * 3 * 2 * 4, 0.0);  // wrong in_features
  p.b.assign(4, 0.0);
  CHECK_THROWS_AS(conv2d_forward(x, p, s), ShapeError);
  try {
    conv2d_forward(x, p, s);
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("(1,2,8,3)") != std::string::npos);
    CHECK(msg.find("24") != std::string::npos);
  }
}

TEST_CASE("conv_transpose identity kernel") {
  Rng rng(9);
  Tensor4 x = rand_tensor(rng, 1, 2, 6, 3);
  ConvSpec s{3, 1, 1, 1, 1, Padding::kValid, Activation::none()};
  ConvParams p;
  p.w.assign(1 * 1 * 3 * 3, 0.0);
  for (std::size_t i = 0; i < 3; ++i) p.w[i * 3 + i] = 1.0;  // w[(0,0,co,ci)] = I
  p.b.assign(3, 0.0);
  Tensor4 y = conv_transpose2d_forward(x, p, s);
  REQUIRE(y.dims == x.dims);
  CHECK(testutil::max_abs_diff(y.data, x.data) == doctest::Approx(0.0));
}

TEST_CASE("conv_transpose valid expands rows 1 -> 17") {
  Rng rng(5);
  Tensor4 x = rand_tensor(rng, 1, 1, 12, 6);
  ConvSpec s{8, 17, 1, 1, 1, Padding::kValid, Activation::leaky_relu(0.2)};
  Rng wrng(6);
  ConvParams p = init_conv_transpose(s, 6, wrng);
  Tensor4 y = conv_transpose2d_forward(x, p, s);
  CHECK(y.dims == std::array<std::size_t, 4>{1, 17, 12, 8});
}

TEST_CASE("conv_transpose same stride-2 doubles time 375 -> 750") {
  Rng rng(5);
  Tensor4 x = rand_tensor(rng, 1, 2, 375, 4);
  ConvSpec s{3, 1, 3, 1, 2, Padding::kSame, Activation::none()};
  Rng wrng(8);
  ConvParams p = init_conv_transpose(s, 4, wrng);
  Tensor4 y = conv_transpose2d_forward(x, p, s);
  CHECK(y.dims == std::array<std::size_t, 4>{1, 2, 750, 3});
}

TEST_CASE("conv_transpose is the exact adjoint of conv2d") {
  // <conv(x), y> == <x, conv_transpose(y)> for shared weights, zero bias,
  // with input extents aligned to the stride so the sizes round-trip.
  for (Padding pad : {Padding::kSame, Padding::kValid}) {
    Rng rng(21);
    ConvSpec c{5, 2, 4, 1, 2, pad, Activation::none()};
    Tensor4 x = rand_tensor(rng, 1, 4, 16, 3);
    ConvParams p = init_conv(c, 3, rng);
    Tensor4 cx = conv2d_forward(x, p, c);

    Tensor4 y = rand_tensor(rng, cx.dims[0], cx.dims[1], cx.dims[2], cx.dims[3]);
    // the conv's (kh,kw,cin,cout) buffer reads as the adjoint's
    // (kh,kw,filters=cin,in=cout) verbatim
    ConvSpec ct{3, 2, 4, 1, 2, pad, Activation::none()};
    ConvParams pt;
    pt.w = p.w;
    pt.b.assign(3, 0.0);
    Tensor4 ty = conv_transpose2d_forward(y, pt, ct);
    REQUIRE(ty.dims == x.dims);

    const double lhs = std::inner_product(cx.data.begin(), cx.data.end(), y.data.begin(), 0.0);
    const double rhs = std::inner_product(x.data.begin(), x.data.end(), ty.data.begin(), 0.0);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
  }
}

TEST_CASE("leaky_relu values") {
  Tensor4 x(1, 1, 3, 1);
  x.data = {2.0, -2.0, 0.0};
  Tensor4 y = leaky_relu(x, 0.2);
  CHECK(y.data[0] == doctest::Approx(2.0));
  CHECK(y.data[1] == doctest::Approx(-0.4));
  CHECK(y.data[2] == doctest::Approx(0.0));
}

TEST_CASE("bilstm zero parameters give zero output") {
  Rng rng(2);
  Mat seq = testutil::rand_mat(rng, 6, 3);
  BiLstmParams p;
  p.input_dim = 3;
  p.hidden = 4;
  for (LstmDirParams* d : {&p.fwd, &p.bwd}) {
    d->wx.assign(3 * 16, 0.0);
    d->wh.assign(4 * 16, 0.0);
    d->b.assign(16, 0.0);
  }
  Mat y = bilstm_forward(seq, p);
  REQUIRE(y.rows == 6);
  REQUIRE(y.cols == 8);
  for (double v : y.v) CHECK(v == doctest::Approx(0.0));
}

TEST_CASE("bilstm output width is twice the hidden size") {
  Rng rng(14);
  Mat seq = testutil::rand_mat(rng, 5, 7);
  BiLstmParams p = init_bilstm(7, 512, rng);
  Mat y = bilstm_forward(seq, p);
  CHECK(y.cols == 1024);
}

TEST_CASE("bilstm with tied directions: reversing input swaps and reverses halves") {
  Rng rng(31);
  Mat seq = testutil::rand_mat(rng, 6, 3);
  BiLstmParams p = init_bilstm(3, 4, rng);
  p.bwd = p.fwd;  // tie the directions so the symmetry is exact

  Mat rev(6, 3);
  for (std::size_t t = 0; t < 6; ++t) std::copy_n(seq.row(5 - t), 3, rev.row(t));

  Mat y = bilstm_forward(seq, p);
  Mat yr = bilstm_forward(rev, p);
  const std::size_t H = 4;
  for (std::size_t t = 0; t < 6; ++t) {
    for (std::size_t j = 0; j < H; ++j) {
      CHECK(yr.at(t, j) == doctest::Approx(y.at(5 - t, H + j)).epsilon(1e-12));
      CHECK(yr.at(t, H + j) == doctest::Approx(y.at(5 - t, j)).epsilon(1e-12));
    }
  }
}

// ---- gradients --------------------------------------------------------------

namespace {

// Finite-difference check of a single conv layer (both directions).
GradCheckResult conv_fd(bool transpose, Padding pad, Activation act, std::uint64_t seed,
                        double eps = 1e-5) {
  Rng rng(seed);
  ConvSpec s{4, 2, 3, 1, 2, pad, act};
  const std::size_t cin = 3;
  Tensor4 x = rand_tensor(rng, 2, 4, 10, cin);
  ConvParams p = transpose ? init_conv_transpose(s, cin, rng) : init_conv(s, cin, rng);

  ConvCache cache;
  ConvParams g;
  g.w.assign(p.w.size(), 0.0);
  g.b.assign(p.b.size(), 0.0);
  Tensor4 d_in(x.dims[0], x.dims[1], x.dims[2], x.dims[3]);

  auto fwd = [&] {
    return transpose ? conv_transpose2d_forward(x, p, s, &cache)
                     : conv2d_forward(x, p, s, &cache);
  };
  auto bwd = [&](const Tensor4& up) {
    g.zero();
    Tensor4 di = transpose ? conv_transpose2d_backward(x, cache, p, s, up, &g)
                           : conv2d_backward(x, cache, p, s, up, &g);
    std::copy(di.data.begin(), di.data.end(), d_in.data.begin());
  };

  Tensor4 out = fwd();
  Tensor4 proj = rand_tensor(rng, out.dims[0], out.dims[1], out.dims[2], out.dims[3]);

  std::vector<CheckBlock> blocks{
      {"w", std::span<double>(p.w), std::span<const double>(g.w)},
      {"b", std::span<double>(p.b), std::span<const double>(g.b)},
      {"x", std::span<double>(x.data), std::span<const double>(d_in.data)},
  };
  return check_gradients(fwd, bwd, blocks, proj, eps);
}

}  // namespace

TEST_CASE("conv2d gradients match central finite differences") {
  for (Padding pad : {Padding::kSame, Padding::kValid}) {
    auto res = conv_fd(false, pad, Activation::leaky_relu(0.2), 42);
    CHECK(res.max_rel_err < 1e-4);
  }
}

TEST_CASE("conv_transpose2d gradients match central finite differences") {
  for (Padding pad : {Padding::kSame, Padding::kValid}) {
    auto res = conv_fd(true, pad, Activation::leaky_relu(0.2), 52);
    CHECK(res.max_rel_err < 1e-4);
  }
}

TEST_CASE("purely linear conv gradient is near machine precision") {
  // central differences are exact for a linear map, so a large step leaves
  // only rounding noise
  auto res = conv_fd(false, Padding::kSame, Activation::none(), 77, 1e-2);
  CHECK(res.max_rel_err < 1e-8);
}

TEST_CASE("zero upstream gives zero gradients; scaling upstream scales them") {
  Rng rng(63);
  ConvSpec s{3, 1, 3, 1, 1, Padding::kSame, Activation::leaky_relu(0.2)};
  Tensor4 x = rand_tensor(rng, 1, 2, 8, 2);
  ConvParams p = init_conv(s, 2, rng);
  ConvCache cache;
  Tensor4 y = conv2d_forward(x, p, s, &cache);

  ConvParams g0;
  g0.w.assign(p.w.size(), 0.0);
  g0.b.assign(p.b.size(), 0.0);
  Tensor4 zero_up(y.dims[0], y.dims[1], y.dims[2], y.dims[3]);
  Tensor4 dz = conv2d_backward(x, cache, p, s, zero_up, &g0);
  for (double v : g0.w) CHECK(v == 0.0);
  for (double v : dz.data) CHECK(v == 0.0);

  Tensor4 up = rand_tensor(rng, y.dims[0], y.dims[1], y.dims[2], y.dims[3]);
  ConvParams g1, g2;
  g1.w.assign(p.w.size(), 0.0);
  g1.b.assign(p.b.size(), 0.0);
  g2.w.assign(p.w.size(), 0.0);
  g2.b.assign(p.b.size(), 0.0);
  Tensor4 d1 = conv2d_backward(x, cache, p, s, up, &g1);
  Tensor4 up3 = up;
  for (double& v : up3.data) v *= 3.0;
  Tensor4 d3 = conv2d_backward(x, cache, p, s, up3, &g2);
  for (std::size_t i = 0; i < g1.w.size(); ++i) {
    CHECK(g2.w[i] == doctest::Approx(3.0 * g1.w[i]).epsilon(1e-12));
  }
  for (std::size_t i = 0; i < d1.data.size(); ++i) {
    CHECK(d3.data[i] == doctest::Approx(3.0 * d1.data[i]).epsilon(1e-12));
  }
}

TEST_CASE("bilstm gradients match central finite differences (T=4, D=3, H=2)") {
  Rng rng(19);
  const std::size_t T = 4, D = 3, H = 2;
  Mat seq = testutil::rand_mat(rng, T, D);
  BiLstmParams p = init_bilstm(D, H, rng);

  BiLstmCache cache;
  BiLstmParams g = p;
  g.zero();
  Mat d_seq(T, D);

  auto fwd = [&] {
    Mat y = bilstm_forward(seq, p, &cache);
    Tensor4 t(1, 1, T, 2 * H);
    t.data = y.v;
    return t;
  };
  auto bwd = [&](const Tensor4& up) {
    g.zero();
    Mat u(T, 2 * H);
    u.v = up.data;
    Mat ds = bilstm_backward(seq, cache, p, u, &g);
    d_seq = ds;
  };

  Tensor4 proj = rand_tensor(rng, 1, 1, T, 2 * H);
  auto span_of = [](std::vector<double>& v) { return std::span<double>(v); };
  auto cspan_of = [](const std::vector<double>& v) { return std::span<const double>(v); };
  std::vector<CheckBlock> blocks{
      {"fwd.wx", span_of(p.fwd.wx), cspan_of(g.fwd.wx)},
      {"fwd.wh", span_of(p.fwd.wh), cspan_of(g.fwd.wh)},
      {"fwd.b", span_of(p.fwd.b), cspan_of(g.fwd.b)},
      {"bwd.wx", span_of(p.bwd.wx), cspan_of(g.bwd.wx)},
      {"bwd.wh", span_of(p.bwd.wh), cspan_of(g.bwd.wh)},
      {"bwd.b", span_of(p.bwd.b), cspan_of(g.bwd.b)},
      {"seq", span_of(seq.v), cspan_of(d_seq.v)},
  };
  auto res = check_gradients(fwd, bwd, blocks, proj, 1e-5);
  CHECK(res.max_rel_err < 1e-4);
}

// ---- Adam -------------------------------------------------------------------

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
  std::vector<double> p{1.0, -2.0, 3.0};
  std::vector<double> g{0.0, 0.0, 0.0};
  AdamState st = AdamState::init({3}, AdamConfig{});
  adam_step({std::span<double>(p)}, {std::span<const double>(g)}, st);
  CHECK(p[0] == doctest::Approx(1.0));
  CHECK(p[1] == doctest::Approx(-2.0));
  CHECK(p[2] == doctest::Approx(3.0));
  CHECK(st.t == 1);
}

TEST_CASE("adam: first step moves each parameter by about -lr*sign(g)") {
  // |g| well above epsilon so the m-hat/sqrt(v-hat) = sign(g) identity holds
  // to the stated 1e-6 relative slack
  std::vector<double> p{0.5, 0.5, 0.5};
  std::vector<double> g{0.3, -4.0, 0.05};
  AdamConfig cfg;
  cfg.lr = 1e-4;
  AdamState st = AdamState::init({3}, cfg);
  adam_step({std::span<double>(p)}, {std::span<const double>(g)}, st);
  for (std::size_t i = 0; i < 3; ++i) {
    const double step = p[i] - 0.5;
    const double expect = -cfg.lr * (g[i] > 0 ? 1.0 : -1.0);
    CHECK(std::fabs(step - expect) < cfg.lr * 1e-6 + 1e-12);
  }
}

TEST_CASE("adam: gradients g and 2g give equal first-step magnitude") {
  std::vector<double> p{1.0, 1.0};
  std::vector<double> g{0.2, 0.4};
  AdamConfig cfg;
  AdamState st = AdamState::init({2}, cfg);
  adam_step({std::span<double>(p)}, {std::span<const double>(g)}, st);
  CHECK(std::fabs(p[0] - 1.0) == doctest::Approx(std::fabs(p[1] - 1.0)).epsilon(1e-6));
}

TEST_CASE("adam: lr=0 is a fixed point and v stays non-negative") {
  std::vector<double> p{1.0, -1.0};
  std::vector<double> g{5.0, -3.0};
  AdamConfig cfg;
  cfg.lr = 0.0;
  AdamState st = AdamState::init({2}, cfg);
  for (int i = 0; i < 5; ++i) {
    adam_step({std::span<double>(p)}, {std::span<const double>(g)}, st);
  }
  CHECK(p[0] == 1.0);
  CHECK(p[1] == -1.0);
  for (double v : st.v[0]) CHECK(v >= 0.0);
}

// ---- init -------------------------------------------------------------------

TEST_CASE("init is seed-deterministic and seed-sensitive") {
  ConvSpec s{16, 5, 5, 1, 1, Padding::kSame, Activation::leaky_relu(0.2)};
  Rng a(123), b(123), c(124);
  ConvParams pa = init_conv(s, 25, a);
  ConvParams pb = init_conv(s, 25, b);
  ConvParams pc = init_conv(s, 25, c);
  CHECK(pa.w == pb.w);
  CHECK(pa.w != pc.w);
}

TEST_CASE("init sample std is within 10% of sqrt(2/fan_in)") {
  ConvSpec s{16, 5, 5, 1, 1, Padding::kSame, Activation::leaky_relu(0.2)};
  Rng rng(9001);
  ConvParams p = init_conv(s, 25, rng);  // 5*5*25*16 = 10000 weights
  REQUIRE(p.w.size() == 10000);
  double mean = 0.0;
  for (double w : p.w) mean += w;
  mean /= static_cast<double>(p.w.size());
  double var = 0.0;
  for (double w : p.w) var += (w - mean) * (w - mean);
  var /= static_cast<double>(p.w.size());
  const double expect = std::sqrt(2.0 / (5.0 * 5.0 * 25.0));
  CHECK(std::sqrt(var) == doctest::Approx(expect).epsilon(0.10));
  for (double b : p.b) CHECK(b == 0.0);
}

TEST_CASE("lstm init sets forget bias to one") {
  Rng rng(4);
  BiLstmParams p = init_bilstm(6, 3, rng);
  for (std::size_t j = 0; j < 3; ++j) {
    CHECK(p.fwd.b[j] == 0.0);
    CHECK(p.fwd.b[3 + j] == 1.0);
    CHECK(p.fwd.b[6 + j] == 0.0);
    CHECK(p.fwd.b[9 + j] == 0.0);
  }
}
