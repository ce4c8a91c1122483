#include <doctest.h>

#include <cmath>
#include <set>

#include "vtc/digest.hpp"
#include "vtc/rng.hpp"

using namespace vtc;

TEST_CASE("fnv1a64 known vectors") {
  // reference values computed from the published offset basis / prime
  CHECK(fnv1a64("") == 0xcbf29ce484222325ull);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cull);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ull);
}

TEST_CASE("digest hex format") {
  Fnv1a64 d;
  d.update(std::string("foobar"));
  CHECK(d.hex() == "85944171f73967e8");
  CHECK(d.hex().size() == 16);
  CHECK(digest_hex("") == "cbf29ce484222325");
}

TEST_CASE("digest is chunking-invariant") {
  Fnv1a64 a, b;
  a.update(std::string("hello world"));
  b.update(std::string("hello "));
  b.update(std::string("world"));
  CHECK(a.value() == b.value());
}

TEST_CASE("rng determinism and stream separation") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

  Rng s1(42, "weights"), s2(42, "weights"), s3(42, "bias");
  bool same = true, cross_same = true;
  for (int i = 0; i < 64; ++i) {
    uint64_t x = s1.next_u64();
    if (x != s2.next_u64()) same = false;
    if (x != s3.next_u64()) cross_same = true;  // just advance s3
  }
  CHECK(same);
  // named streams with different names diverge
  Rng t1(42, "weights"), t2(42, "bias");
  int diff = 0;
  for (int i = 0; i < 64; ++i)
    if (t1.next_u64() != t2.next_u64()) ++diff;
  CHECK(diff > 60);
  (void)cross_same;
}

TEST_CASE("uniform range and mean") {
  Rng r(7);
  double sum = 0;
  for (int i = 0; i < 20000; ++i) {
    double u = r.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    sum += u;
  }
  CHECK(std::abs(sum / 20000 - 0.5) < 0.01);

  Rng r2(7);
  for (int i = 0; i < 1000; ++i) {
    double u = r2.uniform(-3.0, 5.0);
    CHECK(u >= -3.0);
    CHECK(u < 5.0);
  }
}

TEST_CASE("uniform_int covers range uniformly enough") {
  Rng r(11);
  std::set<uint64_t> seen;
  int counts[7] = {0};
  for (int i = 0; i < 7000; ++i) {
    uint64_t v = r.uniform_int(7);
    CHECK(v < 7);
    seen.insert(v);
    counts[v]++;
  }
  CHECK(seen.size() == 7);
  for (int c : counts) CHECK(c > 800);
}

TEST_CASE("normal moments") {
  Rng r(13);
  double sum = 0, sq = 0;
  int n = 50000;
  for (int i = 0; i < n; ++i) {
    double z = r.normal();
    sum += z;
    sq += z * z;
  }
  CHECK(std::abs(sum / n) < 0.02);
  CHECK(std::abs(sq / n - 1.0) < 0.03);
}

TEST_CASE("truncated normal stays inside two sigmas") {
  Rng r(17);
  for (int i = 0; i < 20000; ++i) {
    double z = r.truncated_normal(0.02);
    CHECK(std::abs(z) <= 2.0 * 0.02 + 1e-12);
  }
}

TEST_CASE("mix64 avalanche differentiates nearby keys") {
  CHECK(mix64(1, 2) != mix64(2, 1));
  CHECK(mix64(0, 0) != mix64(0, 1));
  CHECK(mix64(5, 6, 7) != mix64(5, 7, 6));
}
