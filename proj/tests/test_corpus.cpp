#include <gtest/gtest.h>

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

#include "qroute/corpus.hpp"

using namespace qroute;

namespace {

std::string line(const std::string& id, const std::string& q, const std::string& label, const std::string& dom = "wiki") {
    return R"({"id":")" + id + R"(","query":")" + q + R"(","domain":")" + dom + R"(","label":")" + label + "\"}\n";
}

Dataset parse(const std::string& s) {
    std::istringstream in(s);
    return parse_dataset(in);
}

std::string error_of(const std::string& s) {
    try {
        parse(s);
    } catch (const DataError& e) {
        return e.what();
    }
    return {};
}

Dataset with_counts(std::size_t a, std::size_t b, std::size_t c) {
    std::vector<QueryRecord> r;
    const LabelCounts n{a, b, c};
    for (Label l : kAllLabels)
        for (std::size_t i = 0; i < n[index_of(l)]; ++i)
            r.push_back({std::string(to_string(l)) + std::to_string(i), "query text", "wiki", l});
    return Dataset(std::move(r));
}

} // namespace

TEST(Dataset, ThreeValidLinesTally) {
    const auto ds = parse(line("a", "Who?", "single_hop") + line("b", "Why and how?", "multi_hop") +
                          "\n" + line("c", "Summarize.", "summary", "legal"));
    ASSERT_EQ(ds.size(), 3u);
    EXPECT_EQ(ds.label_counts(), (LabelCounts{1, 1, 1}));
    EXPECT_EQ(ds.domain_counts().at("wiki"), 2u);
    EXPECT_EQ(ds.domain_counts().at("legal"), 1u);
    EXPECT_EQ(ds[2].id, "c");
}

TEST(Dataset, UnknownLabelNamesLineAndAcceptedValues) {
    const auto msg = error_of(line("a", "x", "single_hop") + line("b", "y", "factual"));
    EXPECT_NE(msg.find("line 2"), std::string::npos) << msg;
    EXPECT_NE(msg.find("factual"), std::string::npos);
    for (const char* v : {"single_hop", "multi_hop", "summary"}) EXPECT_NE(msg.find(v), std::string::npos) << msg;
}

TEST(Dataset, DuplicateIdRejected) {
    const auto msg = error_of(line("q1", "x", "single_hop") + line("q1", "y", "summary"));
    EXPECT_NE(msg.find("duplicate id"), std::string::npos) << msg;
    EXPECT_NE(msg.find("q1"), std::string::npos);
}

TEST(Dataset, MalformedAndIncompleteLines) {
    EXPECT_NE(error_of(line("a", "x", "summary") + "{not json\n").find("line 2"), std::string::npos);
    EXPECT_NE(error_of(R"({"id":"a","query":"x","label":"summary"})").find("domain"), std::string::npos);
    EXPECT_NE(error_of(R"({"id":"a","query":5,"domain":"d","label":"summary"})").find("query"), std::string::npos);
    EXPECT_NE(error_of(line("a", "   ", "summary")).find("empty query"), std::string::npos);
    EXPECT_NE(error_of("[1,2]\n").find("not an object"), std::string::npos);
}

TEST(Dataset, RoundTripIsIdentity) {
    SyntheticOptions o;
    o.n_per_label = {7, 3, 5};
    o.seed = 11;
    const auto ds = generate_synthetic(o);
    std::vector<QueryRecord> extra = ds.records();
    extra.push_back({"odd,\"id\"", "Quotes \"inside\" and unicode caf\xc3\xa9", "other", Label::summary});
    const Dataset original(extra);
    std::ostringstream out;
    write_dataset(out, original);
    const auto back = parse(out.str());
    EXPECT_EQ(back.records(), original.records());
}

TEST(LabelDistribution, ReferenceTallies) {
    const auto d = label_distribution(with_counts(529, 171, 300));
    EXPECT_NEAR(d.proportion[0], 0.529, 1e-12);
    EXPECT_NEAR(d.proportion[1], 0.171, 1e-12);
    EXPECT_NEAR(d.proportion[2], 0.300, 1e-12);
}

TEST(LabelDistribution, UniformAndDegenerate) {
    const auto u = label_distribution(with_counts(1, 1, 1));
    for (double p : u.proportion) EXPECT_DOUBLE_EQ(p, 1.0 / 3.0);
    const auto s = label_distribution(with_counts(4, 0, 0));
    EXPECT_EQ(s.proportion[0], 1.0);
    EXPECT_EQ(s.proportion[1], 0.0);
    EXPECT_THROW(label_distribution(Dataset{}), DataError);
}

TEST(StratifiedKFold, SixTwoTwoSplitsEvenly) {
    const auto ds = with_counts(6, 2, 2);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto fa = stratified_kfold(ds, 2, seed);
        for (std::size_t f = 0; f < 2; ++f) {
            LabelCounts c{};
            for (std::size_t i : fa.members(f)) ++c[index_of(ds[i].label)];
            EXPECT_EQ(c, (LabelCounts{3, 1, 1})) << "seed " << seed << " fold " << f;
        }
    }
}

TEST(StratifiedKFold, Preconditions) {
    const auto ds = with_counts(6, 2, 2);
    EXPECT_THROW(stratified_kfold(ds, 1, 0), UsageError);
    EXPECT_THROW(stratified_kfold(ds, 3, 0), DataError);  // multi_hop has 2 < 3
}

TEST(StratifiedKFold, DeterministicPerSeed) {
    const auto ds = with_counts(40, 13, 22);
    EXPECT_EQ(stratified_kfold(ds, 5, 9).fold_of, stratified_kfold(ds, 5, 9).fold_of);
    EXPECT_NE(stratified_kfold(ds, 5, 9).fold_of, stratified_kfold(ds, 5, 10).fold_of);
}

TEST(StratifiedKFold, RandomInstancesKeepInvariant) {
    Rng rng(123);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t k = 2 + rng.below(6);
        std::vector<Label> y;
        for (Label l : kAllLabels) {
            const std::size_t n = rng.bernoulli(0.2) ? 0 : k + rng.below(40);
            for (std::size_t i = 0; i < n; ++i) y.push_back(l);
        }
        if (y.empty()) continue;
        rng.shuffle(y);
        const auto fa = stratified_kfold(y, k, rng.next());
        ASSERT_EQ(fa.fold_of.size(), y.size());
        std::vector<LabelCounts> per(k, LabelCounts{});
        LabelCounts total{};
        for (std::size_t i = 0; i < y.size(); ++i) {
            ASSERT_LT(fa.fold_of[i], k);
            ++per[fa.fold_of[i]][index_of(y[i])];
            ++total[index_of(y[i])];
        }
        for (std::size_t f = 0; f < k; ++f)
            for (std::size_t c = 0; c < kNumClasses; ++c)
                EXPECT_LE(std::abs(static_cast<double>(per[f][c]) - static_cast<double>(total[c]) / k), 1.0);
    }
}

TEST(Synthetic, CountsExactAndReproducible) {
    SyntheticOptions o;
    o.seed = 7;
    const auto a = generate_synthetic(o);
    const auto b = generate_synthetic(o);
    EXPECT_EQ(a.size(), 300u);
    EXPECT_EQ(a.label_counts(), (LabelCounts{100, 100, 100}));
    EXPECT_EQ(a.records(), b.records());
    EXPECT_EQ(a.domain_counts().size(), 4u);
    EXPECT_EQ(a.domain_counts().at("wiki"), 75u);
}

TEST(Synthetic, NoiseFreeFactualQueriesStartWithQuestionWord) {
    SyntheticOptions o;
    o.seed = 3;
    o.noise_rate = 0.0;
    const std::set<std::string> wh{"who", "what", "when", "where", "which"};
    const auto ds = generate_synthetic(o);
    for (const auto& r : ds.records()) {
        if (r.label != Label::single_hop) continue;
        std::string first;
        for (char c : r.text) {
            if (!std::isalpha(static_cast<unsigned char>(c))) break;
            first += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        }
        EXPECT_TRUE(wh.count(first)) << r.text;
    }
}

TEST(Synthetic, SeedsChangeTextsNotCounts) {
    SyntheticOptions o;
    o.seed = 1;
    const auto a = generate_synthetic(o);
    o.seed = 2;
    const auto b = generate_synthetic(o);
    EXPECT_EQ(a.label_counts(), b.label_counts());
    EXPECT_NE(a.texts(), b.texts());
}

TEST(Synthetic, RejectsAllZeroCounts) {
    SyntheticOptions o;
    o.n_per_label = {0, 0, 0};
    EXPECT_THROW(generate_synthetic(o), UsageError);
}
