#include <gtest/gtest.h>

#include <filesystem>

#include "nsmc/output.hpp"
#include "nsmc/parser.hpp"

using namespace nsmc;

namespace {

std::vector<std::string> corpus_files() {
  std::vector<std::string> out;
  for (const auto& e : std::filesystem::directory_iterator(NSMC_MODELS_DIR))
    if (e.path().extension() == ".npta") out.push_back(e.path().string());
  std::sort(out.begin(), out.end());
  return out;
}

// Byte offset of a 1-based line/column position.
std::size_t offset_of(const std::string& src, SourcePos p) {
  std::size_t off = 0;
  for (int line = 1; line < p.line; ++line) off = src.find('\n', off) + 1;
  return off + static_cast<std::size_t>(p.col - 1);
}

}  // namespace

TEST(Lexer, SkipsCommentsAndTracksPositions) {
  auto toks = tokenize("int a; // note\n/* block\n */ clock x;");
  ASSERT_GE(toks.size(), 6u);
  EXPECT_EQ(toks[3].text, "clock");
  EXPECT_EQ(toks[3].pos.line, 3);
}

TEST(Lexer, NumbersAndQualifiedNames) {
  auto toks = tokenize("2. 1e-3 T.T3 x'");
  EXPECT_EQ(toks[0].kind, Tok::Number);
  EXPECT_FALSE(toks[0].integral);
  EXPECT_DOUBLE_EQ(toks[1].number, 1e-3);
  EXPECT_EQ(toks[2].kind, Tok::Ident);
  EXPECT_EQ(toks[3].kind, Tok::Dot);
  EXPECT_EQ(toks[6].kind, Tok::Prime);
}

TEST(Lexer, UnknownCharacterIsPositioned) {
  try {
    tokenize("int a;\n  $");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.pos.line, 2);
    EXPECT_EQ(e.pos.col, 3);
  }
}

TEST(Parser, CorpusRoundTrip) {
  for (const auto& f : corpus_files()) {
    const auto ast = parse_model(read_file(f));
    const auto printed = to_source(ast);
    const auto again = parse_model(printed);
    EXPECT_EQ(to_source(again), printed) << f;
    EXPECT_EQ(again.templates.size(), ast.templates.size()) << f;
    EXPECT_EQ(again.system, ast.system) << f;
  }
}

// Deleting any single token either still parses or yields an error on the
// deleted token's line or the line of the token that followed it. A deleted
// closing brace leaves a valid prefix up to some later token, so there the
// error can only be required not to precede the deletion.
TEST(Parser, DeletedTokenErrorsAreLocated) {
  int located = 0, braces = 0;
  for (const auto& f : corpus_files()) {
    const auto src = read_file(f);
    const auto toks = tokenize(src);
    for (std::size_t i = 0; i + 1 < toks.size(); ++i) {
      const auto off = offset_of(src, toks[i].pos);
      if (src.compare(off, toks[i].text.size(), toks[i].text) != 0) continue;
      std::string broken = src;
      broken.erase(off, toks[i].text.size());
      broken.insert(off, " ");
      try {
        parse_model(broken);
      } catch (const ParseError& e) {
        if (toks[i].kind == Tok::RBrace) {
          EXPECT_GE(e.pos.line, toks[i].pos.line) << f;
          ++braces;
          continue;
        }
        const int next_line = toks[i + 1].pos.line;
        EXPECT_TRUE(e.pos.line == toks[i].pos.line || e.pos.line == next_line)
            << f << ": deleting '" << toks[i].text << "' at " << toks[i].pos.line << " reported line "
            << e.pos.line;
        ++located;
      }
    }
  }
  EXPECT_GT(located, 200);
  EXPECT_GT(braces, 10);
}

TEST(Parser, TrainTemplateAndInlineInstances) {
  auto ast = parse_model(read_file(std::string(NSMC_MODELS_DIR) + "/traingate.npta"));
  ASSERT_EQ(ast.templates.size(), 2u);
  EXPECT_EQ(ast.templates[0].name, "Train");
  ASSERT_EQ(ast.templates[0].params.size(), 1u);
  EXPECT_EQ(ast.system.size(), 7u);
  EXPECT_EQ(ast.system[0], "Train(0)");
}

TEST(Parser, BranchingEdge) {
  auto ast = parse_model(read_file(std::string(NSMC_MODELS_DIR) + "/bias.npta"));
  const auto& e = ast.templates[0].edges[0];
  EXPECT_TRUE(e.branching);
  ASSERT_EQ(e.branches.size(), 2u);
  EXPECT_EQ(e.branches[0].target, "Work");
  EXPECT_EQ(to_string(e.branches[1].weight), "42");
}

TEST(Parser, MissingSystemLine) {
  EXPECT_THROW(parse_model("int a;"), ParseError);
}

TEST(Query, SimulateWithInlineInstanceNames) {
  auto q = parse_query("simulate 1 [<=300]{Train(0).Cross,Train(5).Cross,Gate.len}");
  EXPECT_EQ(q.kind, QueryKind::Simulate);
  EXPECT_EQ(q.runs, 1);
  EXPECT_EQ(q.bound.kind, BoundKind::Time);
  EXPECT_DOUBLE_EQ(q.bound.limit, 300.0);
  ASSERT_EQ(q.exprs.size(), 3u);
  EXPECT_EQ(q.exprs[0]->name, "Train(0).Cross");
  EXPECT_EQ(q.exprs[2]->name, "Gate.len");
}

TEST(Query, Forms) {
  EXPECT_EQ(parse_query("Pr[<=10](<> T.T3)").kind, QueryKind::Estimate);
  auto h = parse_query("Pr[<=100](<> OK) >= 0.5");
  EXPECT_EQ(h.kind, QueryKind::HypTest);
  EXPECT_DOUBLE_EQ(h.threshold, 0.5);
  auto c = parse_query("Pr[C<=4.3](<> T.T3) >= Pr[#<=5]([] !T.T3)");
  EXPECT_EQ(c.kind, QueryKind::Compare);
  EXPECT_EQ(c.bound.kind, BoundKind::Cost);
  EXPECT_EQ(c.bound.clock, "C");
  EXPECT_EQ(c.bound2.kind, BoundKind::Steps);
  auto e = parse_query("E[<=50;100](min: e)");
  EXPECT_EQ(e.kind, QueryKind::Expect);
  EXPECT_FALSE(e.maximize);
  EXPECT_EQ(e.runs, 100);
  auto cost = parse_query("simulate 1 [cos_t<=1]{sin_t}");
  EXPECT_EQ(cost.bound.kind, BoundKind::Cost);
  EXPECT_EQ(cost.bound.clock, "cos_t");
}

TEST(Query, WeightedUntilAndNext) {
  auto q = parse_query("Pr[<=100]((a && b) U[tau<=10] goal)");
  EXPECT_EQ(q.formula->op, Op::TUntil);
  EXPECT_TRUE(q.formula->bounded);
  EXPECT_DOUBLE_EQ(q.formula->value, 10.0);
  auto n = parse_query("Pr[#<=10](next next p)");
  EXPECT_EQ(n.formula->op, Op::TNext);
  auto nested = parse_query("Pr[<=10]([] (a imply <>[x<=3] b))");
  EXPECT_EQ(nested.formula->op, Op::TGlobally);
}

TEST(Query, CanonicalTextRoundTrips) {
  for (const char* text : {"Pr[<=10](<> T.T3)", "Pr[<=100](<> OK) >= 0.5",
                           "Pr[C<=4.3](<> T.T3) >= Pr[#<=5]([] !T.T3)", "E[<=50;100](max: e + 1)",
                           "simulate 2 [<=12]{sin_t, cos_t}", "Pr[<=100]((a && b) U[tau<=10] goal)",
                           "Pr[<=5](<>[x<=2] (y >= 1 && !(z < 2)))"}) {
    const auto q = parse_query(text);
    const auto printed = to_string(q);
    EXPECT_EQ(to_string(parse_query(printed)), printed) << text;
  }
}

TEST(Query, Errors) {
  EXPECT_THROW(parse_query("Pr[<=10](<> a) >= 1.5"), ParseError);
  EXPECT_THROW(parse_query("simulate 0 [<=10]{a}"), ParseError);
  EXPECT_THROW(parse_query("Pr[<=0](<> a)"), ParseError);
  EXPECT_THROW(parse_query("Pr[<=10](a U b"), ParseError);
  EXPECT_THROW(parse_query("E[<=10;5](avg: a)"), ParseError);
  try {
    parse_query("Pr[<=10](<> a &&)");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.pos.line, 1);
    EXPECT_EQ(e.pos.col, 17);
  }
}

TEST(Query, TemporalOperatorsRejectedInModelExpressions) {
  EXPECT_THROW(parse_model("template P() { clock x; location L { invariant <> x <= 1; } init L; }\nsystem P;"),
               ParseError);
}
