#include <gtest/gtest.h>

#include "parsetalk/error.hpp"
#include "parsetalk/features.hpp"
#include "support.hpp"

using namespace parsetalk;
using testsupport::model_of;
using testsupport::model_unify;

namespace {

Fs fs(const char* text) { return parse_fs(text); }

bool same(const Fs& a, const Fs& b) { return equivalent(a, b); }

}  // namespace

TEST(Unify, EmptyTermIsIdentity) {
  EXPECT_TRUE(same(unify(fs("[case: acc]"), fs("[]")), fs("[case: acc]")));
  EXPECT_TRUE(same(unify(fs("[]"), fs("acc")), fs("acc")));
}

TEST(Unify, AtomicClash) { EXPECT_TRUE(unify(fs("[case: acc]"), fs("[case: dat]")).is_bottom()); }

TEST(Unify, DisjunctionIntersects) {
  EXPECT_TRUE(same(unify(fs("[case: {dat, acc}]"), fs("[case: {acc, nom}]")), fs("[case: acc]")));
  EXPECT_TRUE(unify(fs("[case: {dat, gen}]"), fs("[case: {acc, nom}]")).is_bottom());
  EXPECT_TRUE(same(unify(fs("{a, b, c}"), fs("{b, c, d}")), fs("{c, b}")));
}

TEST(Unify, NotebookGainsPrepositionalAttachment) {
  const Fs before = fs("[self: [agr: <1>=[case: acc, gen: mas, num: sg]], spec: [agr: <1>]]");
  const Fs after = unify(before, fs("[ppatt: [form: mit]]"));
  EXPECT_TRUE(same(after, fs("[self: [agr: <1>=[case: acc, gen: mas, num: sg]], spec: [agr: <1>], ppatt: [form: mit]]")));
  EXPECT_EQ(render_fs(after), "[ppatt: [form: mit], self: [agr: <1>=[case: acc, gen: mas, num: sg]], spec: [agr: <1>]]");
}

TEST(Unify, CoreferencePropagatesInformation) {
  const Fs shared = fs("[p: <1>=[v: x], q: <1>]");
  const Fs out = unify(shared, fs("[q: [w: y]]"));
  EXPECT_TRUE(same(extract_path(out, {"p", "w"}), fs("y")));
  EXPECT_TRUE(same(extract(out, "p"), extract(out, "q")));
  // Clash through the shared node.
  EXPECT_TRUE(unify(shared, fs("[q: [v: z]]")).is_bottom());
}

TEST(Unify, CoreferenceCanBeIntroduced) {
  const Fs a = fs("[p: [v: x], q: [w: y]]");
  const Fs b = fs("[p: <1>=[], q: <1>]");
  const Fs out = unify(a, b);
  EXPECT_TRUE(same(out, fs("[p: <1>=[v: x, w: y], q: <1>]")));
}

TEST(Unify, CycleIsBottom) {
  const Fs a = fs("[p: <1>=[], q: [r: <1>]]");
  const Fs b = fs("[p: <2>=[], q: <2>]");
  EXPECT_TRUE(unify(a, b).is_bottom());
}

TEST(Unify, BottomAbsorbs) {
  EXPECT_TRUE(unify(Fs::bottom(), fs("[a: x]")).is_bottom());
  EXPECT_TRUE(unify(fs("[a: x]"), Fs::bottom()).is_bottom());
}

TEST(Expand, WrapsUnderLabel) {
  EXPECT_TRUE(same(expand("agr", fs("[case: dat]")), fs("[agr: [case: dat]]")));
  EXPECT_TRUE(same(expand("ppatt", fs("[form: mit]")), fs("[ppatt: [form: mit]]")));
  EXPECT_TRUE(expand("case", Fs::bottom()).is_bottom());
}

TEST(Extract, ReadsTopLevelValue) {
  EXPECT_TRUE(same(extract(fs("[agr: [case: dat]]"), "agr"), fs("[case: dat]")));
  EXPECT_TRUE(extract(fs("[case: dat]"), "agr").is_bottom());
  EXPECT_TRUE(extract(fs("dat"), "agr").is_bottom());
  const Fs mit = fs("[self:[form:mit], pobj:[agr:[case:dat, gen:fem, num:sg]]]");
  EXPECT_TRUE(same(extract(mit, "self"), fs("[form: mit]")));
}

TEST(Extract, KeepsSharingInsideTheValue) {
  const Fs u = fs("[self: [a: <1>=[v: x], b: <1>], other: <2>=y]");
  EXPECT_TRUE(same(extract(u, "self"), fs("[a: <3>=[v: x], b: <3>]")));
}

TEST(Equivalent, IgnoresOrderAndTagNumbers) {
  EXPECT_TRUE(same(fs("[a: x, b: y]"), fs("[b: y, a: x]")));
  EXPECT_TRUE(same(fs("[p:<1>=[v:x], q:<1>]"), fs("[p:<7>=[v:x], q:<7>]")));
}

TEST(Equivalent, DistinguishesSharingFromCopies) {
  const Fs shared = fs("[p:<1>=[v:x], q:<1>]");
  const Fs copied = fs("[p:[v:x], q:[v:x]]");
  EXPECT_FALSE(same(shared, copied));
  // Unifying new information into p.w is visible at q only when shared.
  const Fs probe = fs("[p: [w: y]]");
  EXPECT_FALSE(extract_path(unify(shared, probe), {"q", "w"}).is_bottom());
  EXPECT_TRUE(extract_path(unify(copied, probe), {"q", "w"}).is_bottom());
}

TEST(Notation, SingletonDisjunctionCollapses) { EXPECT_TRUE(same(fs("[case: {dat}]"), fs("[case: dat]"))); }

TEST(Notation, BottomAndEmptyRoundTrip) {
  EXPECT_EQ(render_fs(Fs::bottom()), "⊥");
  EXPECT_TRUE(parse_fs("⊥").is_bottom());
  EXPECT_EQ(render_fs(fs("[]")), "[]");
}

TEST(Notation, SyntaxErrorsCarryPosition) {
  try {
    parse_fs("[a: x,\n b: ]");
    FAIL() << "expected a syntax error";
  } catch (const SyntaxError& e) {
    EXPECT_EQ(e.line(), 2);
    EXPECT_GT(e.column(), 1);
  }
  EXPECT_THROW(parse_fs("[a: <1>]"), SyntaxError);           // tag never bound
  EXPECT_THROW(parse_fs("[a: <1>=x, b: <1>=y]"), SyntaxError);  // bound twice
  EXPECT_THROW(parse_fs("[a: x, a: y]"), SyntaxError);        // duplicate label
  EXPECT_THROW(parse_fs("[a: <1>=[b: <1>]]"), SyntaxError);   // cycle
  EXPECT_THROW(parse_fs("[a: x"), SyntaxError);
}

TEST(Notation, RenderIsCanonical) {
  EXPECT_EQ(render_fs(fs("[q: <5>=x, p: <5>]")), "[p: <1>=x, q: <1>]");
  EXPECT_EQ(render_fs(fs("{nom, acc}")), "{acc, nom}");
}

// ---- randomized properties ------------------------------------------------------

class UnifyProperties : public ::testing::Test {
 protected:
  std::mt19937_64 rng{20240531};
  static constexpr int kCases = 1000;
};

TEST_F(UnifyProperties, RoundTripThroughNotation) {
  for (int i = 0; i < kCases; ++i) {
    const Fs x = testsupport::random_fs(rng);
    const std::string text = render_fs(x);
    const Fs back = parse_fs(text);
    ASSERT_TRUE(same(x, back)) << text;
    ASSERT_EQ(render_fs(back), text);
  }
}

TEST_F(UnifyProperties, IdentityIdempotenceAbsorption) {
  for (int i = 0; i < kCases; ++i) {
    const Fs x = testsupport::random_fs(rng);
    ASSERT_TRUE(same(unify(x, Fs::top()), x)) << render_fs(x);
    ASSERT_TRUE(same(unify(x, x), x)) << render_fs(x);
    ASSERT_TRUE(unify(x, Fs::bottom()).is_bottom());
  }
}

TEST_F(UnifyProperties, CommutativeAndAssociative) {
  for (int i = 0; i < kCases; ++i) {
    const Fs x = testsupport::random_fs(rng), y = testsupport::random_fs(rng), z = testsupport::random_fs(rng);
    ASSERT_TRUE(same(unify(x, y), unify(y, x))) << render_fs(x) << " / " << render_fs(y);
    ASSERT_TRUE(same(unify(unify(x, y), z), unify(x, unify(y, z))))
        << render_fs(x) << " / " << render_fs(y) << " / " << render_fs(z);
  }
}

TEST_F(UnifyProperties, ExtractUndoesExpand) {
  for (int i = 0; i < kCases; ++i) {
    const Fs x = testsupport::random_fs(rng);
    ASSERT_TRUE(same(extract(expand("self", x), "self"), x)) << render_fs(x);
  }
}

TEST_F(UnifyProperties, AgreesWithPathCongruenceModel) {
  int consistent = 0;
  for (int i = 0; i < kCases; ++i) {
    const Fs x = testsupport::random_fs(rng), y = testsupport::random_fs(rng);
    const Fs u = unify(x, y);
    const auto expected = model_unify(model_of(x), model_of(y));
    ASSERT_EQ(u.is_bottom(), expected.bottom) << render_fs(x) << " / " << render_fs(y);
    if (!u.is_bottom()) {
      ++consistent;
      ASSERT_EQ(model_of(u), expected) << render_fs(x) << " / " << render_fs(y) << " -> " << render_fs(u);
    }
  }
  EXPECT_GT(consistent, kCases / 10);  // the generator must exercise successful unifications too
}

TEST_F(UnifyProperties, SharedPositionsStayShared) {
  for (int i = 0; i < kCases; ++i) {
    const Fs x = testsupport::random_fs(rng), y = testsupport::random_fs(rng);
    const Fs u = unify(x, y);
    if (u.is_bottom()) continue;
    // Every pair of paths sharing a node in x still shares in the result.
    const auto mx = model_of(x), mu = model_of(u);
    for (const auto& [p, c] : mx.cls) {
      for (const auto& [q, d] : mx.cls) {
        if (c == d) ASSERT_EQ(mu.cls.at(p), mu.cls.at(q));
      }
    }
  }
}
