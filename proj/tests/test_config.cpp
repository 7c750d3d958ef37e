#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "qroute/config.hpp"

using namespace qroute;
using nlohmann::json;

TEST(Config, Defaults) {
    RunConfig c;
    EXPECT_EQ(c.k, 5u);
    EXPECT_EQ(c.baseline, "IterativeRAG");
    EXPECT_EQ(c.batch_cap, 256u);
    EXPECT_FALSE(c.seed);
    EXPECT_NO_THROW(c.validate());
}

TEST(Config, DottedAndNestedKeysAgree) {
    RunConfig a, b;
    apply_setting(a, "svm.C", 4.0);
    apply_setting(a, "mlp.hidden", json::array({64, 32}));
    apply_setting(a, "cost.ratios.NaiveRAG", 1.2);
    apply_setting(a, "cost.policy.multi_hop", "GraphRAG");
    apply_setting(a, "seed", 11);
    apply_config_json(b, json::parse(R"({"svm": {"C": 4.0}, "mlp": {"hidden": [64, 32]},
        "cost": {"ratios": {"NaiveRAG": 1.2}, "policy": {"multi_hop": "GraphRAG"}}, "seed": 11})"));
    for (const RunConfig* c : {&a, &b}) {
        EXPECT_EQ(c->spec.svm.C, 4.0);
        EXPECT_EQ(c->spec.mlp.hidden, (std::vector<std::size_t>{64, 32}));
        EXPECT_EQ(c->table.cost("NaiveRAG"), 1.2);
        EXPECT_EQ(c->policy.map_label(Label::multi_hop), "GraphRAG");
        EXPECT_EQ(c->seed, 11u);
    }
}

TEST(Config, FamilyRegimeAndGamma) {
    RunConfig c;
    apply_setting(c, "classifier", "mlp");
    apply_setting(c, "regime", "structural");
    EXPECT_EQ(c.spec.family, Family::mlp);
    EXPECT_EQ(c.regime, FeatureKind::structural);
    apply_setting(c, "svm.gamma", 0.5);
    EXPECT_EQ(c.spec.svm.gamma, 0.5);
    apply_setting(c, "svm.gamma", "scale");
    EXPECT_FALSE(c.spec.svm.gamma);
    apply_setting(c, "synth.per_label", 7);
    apply_setting(c, "synth.count.summary", 2);
    EXPECT_EQ(c.synth.n_per_label, (LabelCounts{7, 7, 2}));
}

TEST(Config, Errors) {
    RunConfig c;
    EXPECT_THROW(apply_setting(c, "svm.cost", 1.0), UsageError);
    EXPECT_THROW(apply_setting(c, "k", "five"), UsageError);
    EXPECT_THROW(apply_setting(c, "svm.gamma", "auto"), UsageError);
    EXPECT_THROW(apply_setting(c, "cost.policy.factual", "NaiveRAG"), UsageError);
    EXPECT_THROW(apply_setting(c, "classifier", "boosting"), UsageError);
    EXPECT_THROW(apply_config_json(c, json::array()), UsageError);
    RunConfig k1;
    apply_setting(k1, "k", 1);
    EXPECT_THROW(k1.validate(), UsageError);
    RunConfig bad_policy;
    apply_setting(bad_policy, "cost.policy.summary", "Unknown");
    EXPECT_THROW(bad_policy.validate(), UsageError);
    RunConfig bad_base;
    apply_setting(bad_base, "cost.baseline", "Unknown");
    EXPECT_THROW(bad_base.validate(), UsageError);
}

TEST(Config, LoadFromFile) {
    const auto dir = std::filesystem::temp_directory_path() / "qroute_config_test";
    std::filesystem::create_directories(dir);
    const auto good = (dir / "good.json").string();
    std::ofstream(good) << R"({"k": 3, "knn": {"k": 9}, "bind": "0.0.0.0:9000"})";
    const auto c = load_config(good);
    EXPECT_EQ(c.k, 3u);
    EXPECT_EQ(c.spec.knn.k, 9u);
    EXPECT_EQ(c.bind, "0.0.0.0:9000");
    const auto bad = (dir / "bad.json").string();
    std::ofstream(bad) << "{not json";
    EXPECT_THROW(load_config(bad), UsageError);
    EXPECT_THROW(load_config((dir / "missing.json").string()), UsageError);
    std::filesystem::remove_all(dir);
}
