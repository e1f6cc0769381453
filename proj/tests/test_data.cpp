#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "gatenet/data.hpp"
#include "gatenet/error.hpp"

using namespace gatenet;

namespace {

std::vector<RawRow> parse(const std::string& text, char delimiter = '\t') {
  std::istringstream in(text);
  return read_delimited(in, delimiter);
}

}  // namespace

TEST_CASE("schema parsing") {
  const FieldSchema s = FieldSchema::parse("user:cat,price:cont,item");
  REQUIRE(s.size() == 3);
  CHECK(s[1].kind == FieldKind::kContinuous);
  CHECK(s[2].kind == FieldKind::kCategorical);
  CHECK(FieldSchema::parse(s.to_string()) == s);
  CHECK_THROWS_AS(FieldSchema::parse("a,a"), ConfigError);
  CHECK_THROWS_AS(FieldSchema::parse(""), ConfigError);
  CHECK(FieldSchema::categorical(3).to_string() == "c1:cat,c2:cat,c3:cat");
}

TEST_CASE("build_vocab counts and thresholds") {
  const FieldSchema s = FieldSchema::categorical(1);
  const auto rows = parse("1\ta\n0\ta\n1\tb\n");
  const Vocabulary v = build_vocab(rows, s, 2);
  CHECK(v.lookup(0, "a") == 1);
  CHECK(v.lookup(0, "b") == 0);
  CHECK(v.cardinality(0) == 2);

  const Vocabulary all = build_vocab(parse("1\tx\n0\ty\n"), s, 1);
  CHECK(all.cardinality(0) == 3);

  const Vocabulary empty = build_vocab({}, FieldSchema::categorical(2), 1);
  CHECK(empty.cardinalities() == std::vector<std::size_t>{1, 1});
}

TEST_CASE("build_vocab reports the line of a malformed row") {
  const auto rows = parse("1\ta\tb\n0\ta\n");
  try {
    build_vocab(rows, FieldSchema::categorical(2), 1);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("continuous discretization") {
  CHECK(discretize_continuous("") == kMissingToken);
  CHECK(discretize_continuous("1") == "1");
  CHECK(discretize_continuous("2") == "2");
  CHECK(discretize_continuous("-1") == "-1");
  const int bucket = static_cast<int>(std::floor(std::log(100.0) * std::log(100.0)));
  CHECK(bucket == 21);
  CHECK(discretize_continuous("100") == "L21");

  const FieldSchema s = FieldSchema::parse("n:cont");
  const Vocabulary v = build_vocab(parse("1\t100\n0\t\n"), s, 1);
  CHECK(v.lookup(0, "L21") == 1);
  const auto inst = encode_instance(parse("1\t\n").front(), s, v);
  CHECK(inst.indices == std::vector<std::uint32_t>{0});
}

TEST_CASE("encode_instance") {
  const FieldSchema s = FieldSchema::categorical(2);
  const Vocabulary v = build_vocab(parse("1\ta\tx\n0\tb\ty\n"), s, 1);
  const auto unknown = encode_instance(parse("0\tq\tz\n").front(), s, v);
  CHECK(unknown.indices == std::vector<std::uint32_t>{0, 0});
  CHECK(unknown.label == 0);
  const auto known = encode_instance(parse("1\tb\tx\n").front(), s, v);
  CHECK(known.indices == std::vector<std::uint32_t>{2, 1});
  CHECK(known.label == 1);
  CHECK_THROWS_AS(encode_instance(parse("yes\ta\tx\n").front(), s, v), DataError);
}

TEST_CASE("vocabulary file round trip") {
  const FieldSchema s = FieldSchema::categorical(2);
  const Vocabulary v = build_vocab(parse("1\ta\tx\n0\tb\ty\n1\tc\tx\n"), s, 1);
  std::stringstream buf;
  v.save(buf, s);
  const std::string text = buf.str();
  CHECK(text.rfind("c1\ta\t1\n", 0) == 0);
  std::istringstream in(text);
  CHECK(Vocabulary::load(in, s) == v);
}

TEST_CASE("split sizes follow floor(n * fraction)") {
  Dataset d(1);
  for (std::uint32_t i = 0; i < 10; ++i) d.push_back(&i, static_cast<int>(i % 2));
  auto [a, b] = split(d, 0.9, 3);
  CHECK(a.size() == 9);
  CHECK(b.size() == 1);
  auto [c, e] = split(d, 0.7, 3);
  CHECK(c.size() == 7);
  CHECK(e.size() == 3);

  const auto p1 = split_indices(10, 0.7, 3);
  const auto p2 = split_indices(10, 0.7, 3);
  CHECK(p1 == p2);
  std::set<std::size_t> all(p1.first.begin(), p1.first.end());
  all.insert(p1.second.begin(), p1.second.end());
  CHECK(all.size() == 10);
}

TEST_CASE("batches partition the dataset") {
  Dataset d(1);
  for (std::uint32_t i = 0; i < 5; ++i) d.push_back(&i, 0);
  const auto bs = batches(d, 2, 11);
  REQUIRE(bs.size() == 3);
  CHECK(bs[0].size() == 2);
  CHECK(bs[1].size() == 2);
  CHECK(bs[2].size() == 1);
  std::multiset<std::uint32_t> seen;
  for (const auto& b : bs) {
    for (std::size_t r = 0; r < b.size(); ++r) seen.insert(b.row(r)[0]);
  }
  CHECK(seen == std::multiset<std::uint32_t>{0, 1, 2, 3, 4});

  Dataset two(1);
  for (std::uint32_t i = 0; i < 2; ++i) two.push_back(&i, 0);
  CHECK(batches(two, 1000, std::nullopt).size() == 1);
}

TEST_CASE("dataset validation catches out-of-range indices") {
  Dataset d(2);
  const std::uint32_t row[2] = {1, 5};
  d.push_back(row, 1);
  CHECK_NOTHROW(d.validate({2, 6}));
  CHECK_THROWS_AS(d.validate({2, 5}), DataError);
}

TEST_CASE("planted data is deterministic and carries signal only in signal fields") {
  const PlantedData a = synthesize_planted(4, 1, 20000, 5);
  const PlantedData b = synthesize_planted(4, 1, 20000, 5);
  REQUIRE(a.data.size() == 20000);
  CHECK(a.data.labels() == b.data.labels());
  for (std::size_t i = 0; i < 50; ++i) CHECK(a.data.instance(i).indices == b.data.instance(i).indices);
  CHECK_THROWS(synthesize_planted(2, 3, 10, 1));

  // Plug-in mutual information between each field and the label.
  auto mutual_information = [&](std::size_t field) {
    std::map<std::uint32_t, std::array<double, 2>> joint;
    double pos = 0;
    const double n = static_cast<double>(a.data.size());
    for (std::size_t i = 0; i < a.data.size(); ++i) {
      joint[a.data.indices(i)[field]][a.data.label(i)] += 1;
      pos += a.data.label(i);
    }
    const double py[2] = {(n - pos) / n, pos / n};
    double mi = 0;
    for (const auto& [token, counts] : joint) {
      const double px = (counts[0] + counts[1]) / n;
      for (int y = 0; y < 2; ++y) {
        if (counts[y] > 0) mi += counts[y] / n * std::log(counts[y] / n / (px * py[y]));
      }
    }
    return mi;
  };
  const double signal = mutual_information(0);
  CHECK(signal > 0.02);
  for (std::size_t f = 1; f < 4; ++f) CHECK(mutual_information(f) < signal / 5);
}

TEST_CASE("identity vocabulary maps token i to index i") {
  const Vocabulary v = identity_vocabulary({4, 3});
  CHECK(v.lookup(0, "3") == 3);
  CHECK(v.lookup(1, "2") == 2);
  CHECK(v.lookup(1, "3") == 0);
  CHECK(v.token(0, 2) == "2");
}
