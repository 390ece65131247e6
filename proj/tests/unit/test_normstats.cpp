#include "oracles.hpp"

#include "tinstitch/error.hpp"
#include "tinstitch/linalg.hpp"
#include "tinstitch/normstats.hpp"
#include "tinstitch/tiler.hpp"

#include <doctest.h>

#include <cmath>

using namespace tinstitch;

namespace {

Tensor standardise(const Tensor& x)
{
  return oracle::to_tensor(oracle::instance_norm(oracle::from_tensor(x), 0.0));
}

std::vector<double> output_covariance(const Tensor& y)
{
  return oracle::covariance(oracle::from_tensor(y), 0);
}

} // namespace

TEST_CASE("channel_stats")
{
  const Tensor three({1, 2, 4, 5}, 3.f);
  const ChannelStats z = channel_stats(three, 0.0);
  CHECK(z.mean_at(0, 1) == 3.f);
  CHECK(z.std_at(0, 1) == 0.f);
  const ChannelStats e = channel_stats(three, 1e-5);
  CHECK(e.std_at(0, 0) == doctest::Approx(std::sqrt(1e-5)));

  const Tensor q({1, 1, 2, 2}, {1, 2, 3, 4});
  const ChannelStats s = channel_stats(q, 0.0);
  CHECK(s.mean_at(0, 0) == doctest::Approx(2.5));
  CHECK(s.std_at(0, 0) == doctest::Approx(std::sqrt(1.25)));

  const Tensor r = oracle::random_tensor({3, 4, 11, 13}, 21, -2.f, 5.f);
  const ChannelStats rs = channel_stats(r, 0.0);
  const oracle::Moments m = oracle::two_pass(oracle::from_tensor(r));
  for (std::size_t i = 0; i < m.mean.size(); ++i)
  {
    CHECK(std::abs(rs.mean[i] - m.mean[i]) < 1e-6);
    CHECK(std::abs(rs.stddev[i] - std::sqrt(m.var[i])) < 1e-6);
  }

  CHECK_THROWS_AS(channel_stats(Tensor({1, 1, 0, 3})), ShapeError);
}

TEST_CASE("instance_norm")
{
  const Tensor x = oracle::random_tensor({2, 3, 9, 8}, 22);
  const Tensor y = instance_norm(x, AffineParams::identity(3));
  const oracle::Moments m = oracle::two_pass(oracle::from_tensor(y));
  for (std::size_t i = 0; i < m.mean.size(); ++i)
  {
    CHECK(std::abs(m.mean[i]) < 1e-4);
    CHECK(std::abs(std::sqrt(m.var[i]) - 1.0) < 1e-4);
  }

  const Tensor unit = standardise(x);
  CHECK(oracle::max_abs_diff(instance_norm(unit, AffineParams::identity(3)), unit) < 1e-4);

  AffineParams flat{{0.f, 0.f, 0.f}, {0.5f, -1.f, 2.f}};
  const Tensor c = instance_norm(x, flat);
  for (std::size_t n = 0; n < 2; ++n)
    for (std::size_t ch = 0; ch < 3; ++ch)
      for (std::size_t i = 0; i < 72; ++i)
        CHECK(c.plane(n, ch)[i] == flat.beta[ch]);

  AffineParams aff{{1.5f, 0.5f, -2.f}, {0.1f, 0.2f, 0.3f}};
  const Tensor ya = instance_norm(x, aff, 1e-5);
  const auto ref = oracle::instance_norm(oracle::from_tensor(x), 1e-5);
  for (std::size_t n = 0; n < 2; ++n)
    for (std::size_t ch = 0; ch < 3; ++ch)
      for (std::size_t yy = 0; yy < 9; ++yy)
        for (std::size_t xx = 0; xx < 8; ++xx)
          CHECK(std::abs(ya.at(n, ch, yy, xx) - (aff.gamma[ch] * ref.at(n, ch, yy, xx) + aff.beta[ch])) < 1e-5);
}

TEST_CASE("thumbnail_instance_norm")
{
  const Tensor x = oracle::random_tensor({1, 4, 10, 7}, 23);
  const AffineParams id = AffineParams::identity(4);
  CHECK(oracle::max_abs_diff(thumbnail_instance_norm(x, channel_stats(x), id), instance_norm(x, id)) == 0.0);

  const Tensor five({1, 1, 3, 3}, 5.f);
  ChannelStats s{1, 1, {5.f}, {1.f}};
  const Tensor zeros = thumbnail_instance_norm(five, s, AffineParams::identity(1));
  for (float v : zeros.values())
    CHECK(v == 0.f);

  // Four 2x2 patches of a 4x4 tensor, normalised with whole-tensor statistics.
  const Tensor t = oracle::random_tensor({1, 1, 4, 4}, 24);
  const ChannelStats whole = channel_stats(t);
  const TilePlan plan = plan_tiles(4, 4, 3, 2);
  Tensor assembled({1, 1, 4, 4});
  for (const Rect& r : std::vector<Rect>{{0, 0, 2, 2}, {2, 0, 2, 2}, {0, 2, 2, 2}, {2, 2, 2, 2}})
  {
    const Tensor p = thumbnail_instance_norm(extract_patch(t, r), whole, AffineParams::identity(1));
    for (std::size_t y = 0; y < 2; ++y)
      for (std::size_t x = 0; x < 2; ++x)
        assembled.at(0, 0, r.y + y, r.x + x) = p.at(0, 0, y, x);
  }
  const auto ref = oracle::instance_norm(oracle::from_tensor(t), kDefaultEps);
  CHECK(oracle::max_rel_diff(assembled, ref) <= 1e-6);
}

TEST_CASE("thumbnail_instance_norm is one affine map per channel")
{
  const Tensor x = oracle::random_tensor({1, 3, 6, 6}, 25);
  const ChannelStats s{1, 3, {0.2f, -0.4f, 1.f}, {0.5f, 2.f, 1.25f}};
  const AffineParams aff{{1.f, -0.5f, 2.f}, {0.f, 0.3f, -1.f}};
  const float a = 1.75f, b = -0.6f;
  Tensor shifted(x.shape());
  for (std::size_t i = 0; i < x.numel(); ++i)
    shifted.data()[i] = a * x.data()[i] + b;
  const Tensor y = thumbnail_instance_norm(shifted, s, aff);
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < 36; ++i)
    {
      const double want = (a * x.plane(0, c)[i] + b - s.mean[c]) * aff.gamma[c] / s.stddev[c] + aff.beta[c];
      CHECK(y.plane(0, c)[i] == doctest::Approx(want).epsilon(1e-6));
    }
}

TEST_CASE("thumbnail stats broadcast over a batch")
{
  const Tensor x = oracle::random_tensor({3, 2, 5, 5}, 26);
  const ChannelStats s{1, 2, {0.1f, 0.2f}, {1.5f, 0.5f}};
  const Tensor y = thumbnail_instance_norm(x, s, AffineParams::identity(2));
  for (std::size_t n = 0; n < 3; ++n)
    CHECK(y.at(n, 1, 2, 3) == doctest::Approx((x.at(n, 1, 2, 3) - 0.2) / 0.5));
  const ChannelStats wrong{2, 2, {0, 0, 0, 0}, {1, 1, 1, 1}};
  CHECK_THROWS(thumbnail_instance_norm(x, wrong, AffineParams::identity(2)));
}

TEST_CASE("whitening_stats")
{
  // Two channels whose sample covariance is exactly the identity.
  const Tensor white({1, 2, 2, 2}, {1, -1, 1, -1, 1, 1, -1, -1});
  const WhiteningStats w = whitening_stats(white, 1e-12);
  CHECK(w.inv_sqrt_cov[0] == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(std::abs(w.inv_sqrt_cov[1]) < 1e-4);
  CHECK(w.inv_sqrt_cov[3] == doctest::Approx(1.0).epsilon(1e-4));

  // Same layout scaled to variances 4 and 1.
  const Tensor diag({1, 2, 2, 2}, {2, -2, 2, -2, 1, 1, -1, -1});
  const WhiteningStats d = whitening_stats(diag, 1e-12);
  CHECK(d.inv_sqrt_cov[0] == doctest::Approx(0.5).epsilon(1e-4));
  CHECK(std::abs(d.inv_sqrt_cov[1]) < 1e-4);
  CHECK(d.inv_sqrt_cov[3] == doctest::Approx(1.0).epsilon(1e-4));

  const Tensor r = oracle::random_tensor({1, 3, 32, 32}, 27);
  const WhiteningStats rw = whitening_stats(r);
  const auto cov = oracle::covariance(oracle::from_tensor(r), 0);
  std::vector<double> inv(rw.inv_sqrt_cov.begin(), rw.inv_sqrt_cov.end());
  const auto ident = oracle::matmul(oracle::matmul(inv, cov, 3), inv, 3);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      CHECK(std::abs(ident[i * 3 + j] - (i == j ? 1.0 : 0.0)) < 1e-3);

  CHECK_THROWS_AS(whitening_stats(Tensor({1, 2, 1, 1})), ShapeError);
}

TEST_CASE("inverse square root agrees with an independent iteration")
{
  const Tensor r = oracle::random_tensor({1, 5, 16, 16}, 28);
  // Correlate the channels so the covariance is far from diagonal.
  Tensor mixed(r.shape());
  for (std::size_t c = 0; c < 5; ++c)
    for (std::size_t i = 0; i < 256; ++i)
      mixed.plane(0, c)[i] = r.plane(0, c)[i] + 0.7f * r.plane(0, (c + 1) % 5)[i] - 0.3f * r.plane(0, (c + 3) % 5)[i];
  const WhiteningStats w = whitening_stats(mixed, 1e-12);
  const auto ref = oracle::inverse_sqrt_db(oracle::covariance(oracle::from_tensor(mixed), 0), 5);
  for (std::size_t i = 0; i < 25; ++i)
    CHECK(std::abs(w.inv_sqrt_cov[i] - ref[i]) < 1e-4 * std::max(1.0, std::abs(ref[i])));
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 5; ++j)
      CHECK(w.inv_sqrt_cov[i * 5 + j] == doctest::Approx(w.inv_sqrt_cov[j * 5 + i]).epsilon(1e-5));
}

TEST_CASE("jacobi eigen reconstructs the matrix")
{
  const std::size_t n = 6;
  const auto v = oracle::random_values(n * n, 29);
  std::vector<double> a(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      a[i * n + j] = v[i * n + j] + v[j * n + i];
  const auto e = linalg::jacobi_eigen(a, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
    {
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k)
        s += e.vectors[i * n + k] * e.values[k] * e.vectors[j * n + k];
      CHECK(s == doctest::Approx(a[i * n + j]).epsilon(1e-9));
    }
}

TEST_CASE("thumbnail_instance_whiten")
{
  const Tensor x = oracle::random_tensor({1, 3, 20, 20}, 30);
  const Tensor y = thumbnail_instance_whiten(x, whitening_stats(x));
  const auto cov = output_covariance(y);
  const oracle::Moments m = oracle::two_pass(oracle::from_tensor(y));
  for (std::size_t i = 0; i < 3; ++i)
  {
    CHECK(std::abs(m.mean[i]) < 1e-3);
    for (std::size_t j = 0; j < 3; ++j)
      CHECK(std::abs(cov[i * 3 + j] - (i == j ? 1.0 : 0.0)) < 1e-3);
  }

  const Tensor centred = oracle::random_tensor({1, 2, 4, 4}, 31);
  WhiteningStats id{1, 2, {0.f, 0.f}, {1.f, 0.f, 0.f, 1.f}};
  CHECK(oracle::max_abs_diff(thumbnail_instance_whiten(centred, id), centred) == 0.0);

  // Four-patch split with whole-tensor statistics.
  const Tensor t = oracle::random_tensor({1, 3, 8, 8}, 32);
  const WhiteningStats ws = whitening_stats(t);
  const Tensor whole = instance_whiten(t);
  for (const Rect& r : std::vector<Rect>{{0, 0, 4, 4}, {4, 0, 4, 4}, {0, 4, 4, 4}, {4, 4, 4, 4}})
  {
    const Tensor p = thumbnail_instance_whiten(extract_patch(t, r), ws);
    CHECK(oracle::max_abs_diff(p, extract_patch(whole, r)) <= 1e-5);
  }
}

TEST_CASE("whitening survives rank-deficient covariance")
{
  Tensor x = oracle::random_tensor({1, 3, 6, 6}, 33);
  for (std::size_t i = 0; i < 36; ++i)
  {
    x.plane(0, 1)[i] = 2.f;                  // constant channel
    x.plane(0, 2)[i] = 2.f * x.plane(0, 0)[i]; // collinear channel
  }
  const Tensor y = instance_whiten(x);
  CHECK(all_finite(y));
}

TEST_CASE("adain_transfer")
{
  const Tensor x = oracle::random_tensor({1, 3, 8, 8}, 34);
  const ChannelStats cs = channel_stats(x);
  CHECK(oracle::max_abs_diff(adain_transfer(cs, cs, x), x) <= 1e-5);

  const Tensor unit = standardise(x);
  const ChannelStats c01{1, 3, {0.f, 0.f, 0.f}, {1.f, 1.f, 1.f}};
  const ChannelStats s23{1, 3, {2.f, 2.f, 2.f}, {3.f, 3.f, 3.f}};
  const oracle::Moments m = oracle::two_pass(oracle::from_tensor(adain_transfer(c01, s23, unit)));
  for (std::size_t c = 0; c < 3; ++c)
  {
    CHECK(m.mean[c] == doctest::Approx(2.0).epsilon(1e-4));
    CHECK(std::sqrt(m.var[c]) == doctest::Approx(3.0).epsilon(1e-4));
  }

  // Two patches under shared content statistics get the same per-channel map.
  const Tensor a = oracle::random_tensor({1, 3, 4, 4}, 35);
  const Tensor b = oracle::random_tensor({1, 3, 4, 4}, 36, 3.f, 7.f);
  const ChannelStats style{1, 3, {0.5f, -0.5f, 1.f}, {2.f, 0.25f, 1.f}};
  const Tensor ya = adain_transfer(cs, style, a);
  const Tensor yb = adain_transfer(cs, style, b);
  for (std::size_t c = 0; c < 3; ++c)
  {
    const double slope = style.stddev[c] / cs.stddev[c];
    const double icpt = style.mean[c] - slope * cs.mean[c];
    CHECK(ya.at(0, c, 1, 2) == doctest::Approx(slope * a.at(0, c, 1, 2) + icpt).epsilon(1e-5));
    CHECK(yb.at(0, c, 3, 0) == doctest::Approx(slope * b.at(0, c, 3, 0) + icpt).epsilon(1e-5));
  }

  const ChannelStats two{1, 2, {0, 0}, {1, 1}};
  CHECK_THROWS_AS(adain_transfer(two, two, x), ConfigError);
}

TEST_CASE("blend_style")
{
  const Tensor c = oracle::random_tensor({1, 2, 3, 3}, 37);
  const Tensor s = oracle::random_tensor({1, 2, 3, 3}, 38);
  CHECK(oracle::max_abs_diff(blend_style(c, s, 0.f), c) == 0.0);
  CHECK(oracle::max_abs_diff(blend_style(c, s, 1.f), s) == 0.0);
  const Tensor zero({1, 1, 1, 1}, {0.f});
  const Tensor two({1, 1, 1, 1}, {2.f});
  CHECK(blend_style(zero, two, 0.5f).at(0, 0, 0, 0) == 1.f);
  CHECK_THROWS(blend_style(c, s, 1.5f));
}

TEST_CASE("stats bank modes")
{
  StatsBank bank;
  CHECK(bank.mode() == BankMode::Capture);
  bank.put(3, ChannelStats{1, 1, {0.f}, {1.f}});
  CHECK(bank.contains(3));
  bank.freeze();
  CHECK(bank.mode() == BankMode::Apply);
  CHECK_THROWS_AS(bank.put(4, ChannelStats{1, 1, {0.f}, {1.f}}), StateError);
  CHECK_THROWS_AS(bank.get(5), StateError);
  CHECK_THROWS_AS(bank.style(3), StateError);
}
