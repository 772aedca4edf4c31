#include <doctest.h>

#include <cmath>
#include <vector>

#include "mheat/parallel.hpp"
#include "mheat/rng.hpp"
#include "mheat/stats.hpp"

using namespace mheat;

TEST_CASE("philox known-answer vectors") {
  // Reference values from the Random123 distribution (kat_vectors).
  const auto zero = Philox4x32::block({0, 0, 0, 0}, {0, 0});
  CHECK(zero == Philox4x32::Counter{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  const auto ones = Philox4x32::block({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff},
                                      {0xffffffff, 0xffffffff});
  CHECK(ones == Philox4x32::Counter{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  const auto pi = Philox4x32::block({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344},
                                    {0xa4093822, 0x299f31d0});
  CHECK(pi == Philox4x32::Counter{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("streams are reproducible and distinct") {
  RandomStream a(StreamId{3, 5}), b(StreamId{3, 5}), c(StreamId{3, 6}), d(StreamId{4, 5});
  std::vector<double> xa, xb, xc, xd;
  for (int i = 0; i < 16; ++i) {
    xa.push_back(a.normal());
    xb.push_back(b.normal());
    xc.push_back(c.normal());
    xd.push_back(d.normal());
  }
  CHECK(xa == xb);
  CHECK(xa != xc);
  CHECK(xa != xd);
  CHECK(StreamId{3, 5}.child(1).stream != StreamId{3, 5}.child(2).stream);
}

TEST_CASE("seek replays a block") {
  RandomStream a(StreamId{1, 2});
  for (int i = 0; i < 10; ++i) a.uniform();
  const double u = a.uniform();
  RandomStream b(StreamId{1, 2});
  b.seek(5);
  CHECK(b.uniform() == u);
}

TEST_CASE("uniforms lie in the open unit interval with the right moments") {
  RandomStream rs(StreamId{11, 0});
  RunningStats s;
  constexpr int n = 200000;
  std::vector<int> bins(10, 0);
  for (int i = 0; i < n; ++i) {
    const double u = rs.uniform();
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
    s.add(u);
    ++bins[static_cast<int>(u * 10)];
  }
  CHECK(std::abs(s.mean() - 0.5) < 4 * s.std_error());
  CHECK(s.variance() == doctest::Approx(1.0 / 12).epsilon(0.01));
  double chi2 = 0.0;
  for (int b : bins) chi2 += (b - n / 10.0) * (b - n / 10.0) / (n / 10.0);
  CHECK(chi2 < 21.67);  // 99% quantile, 9 degrees of freedom
}

TEST_CASE("normals have unit variance and vanishing odd moments") {
  RandomStream rs(StreamId{12, 0});
  RunningStats m1, m2, m3, m4;
  for (int i = 0; i < 200000; ++i) {
    const double z = rs.normal();
    m1.add(z);
    m2.add(z * z);
    m3.add(z * z * z);
    m4.add(z * z * z * z);
  }
  CHECK(std::abs(m1.mean()) < 4 * m1.std_error());
  CHECK(std::abs(m2.mean() - 1.0) < 4 * m2.std_error());
  CHECK(std::abs(m3.mean()) < 4 * m3.std_error());
  CHECK(std::abs(m4.mean() - 3.0) < 4 * m4.std_error());
}

TEST_CASE("running stats merge matches a single pass") {
  RandomStream rs(StreamId{13, 0});
  RunningStats all, left, right;
  for (int i = 0; i < 1000; ++i) {
    const double x = rs.normal() * 3 + 1;
    all.add(x);
    (i < 377 ? left : right).add(x);
  }
  left.merge(right);
  CHECK(left.count() == all.count());
  CHECK(left.mean() == doctest::Approx(all.mean()).epsilon(1e-12));
  CHECK(left.variance() == doctest::Approx(all.variance()).epsilon(1e-12));
  RunningStats empty;
  empty.merge(all);
  CHECK(empty.mean() == all.mean());
}

TEST_CASE("standard error halves when the sample quadruples") {
  auto se = [](int n) {
    RandomStream rs(StreamId{14, static_cast<std::uint64_t>(n)});
    RunningStats s;
    for (int i = 0; i < n; ++i) s.add(rs.normal());
    return s.std_error();
  };
  CHECK(se(40000) / se(160000) == doctest::Approx(2.0).epsilon(0.2));
}

TEST_CASE("ensembles do not depend on the worker count") {
  auto run = [](int workers) {
    return run_ensemble(5000, 1, workers, [](std::int64_t id, StatBank& acc) {
      RandomStream rs(StreamId{21, static_cast<std::uint64_t>(id)});
      acc[0].add(rs.normal());
    });
  };
  const StatBank one = run(1), four = run(4);
  CHECK(one[0].count() == 5000);
  CHECK(four[0].mean() == doctest::Approx(one[0].mean()).epsilon(1e-12));
  CHECK(four[0].variance() == doctest::Approx(one[0].variance()).epsilon(1e-12));
}
