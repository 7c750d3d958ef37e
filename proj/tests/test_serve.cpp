#include <gtest/gtest.h>

#include <future>
#include <set>
#include <sstream>
#include <thread>

#include "qroute/eval.hpp"
#include "qroute/serve.hpp"

using namespace qroute;
using nlohmann::json;

namespace {

std::shared_ptr<const Router> small_router() {
    SyntheticOptions o;
    o.n_per_label = {40, 40, 40};
    o.seed = 12;
    o.noise_rate = 0.0;
    const auto ds = generate_synthetic(o);
    auto spec = ClassifierSpec::defaults(Family::logreg, 12);
    const std::string bytes = serialize_model(train_full(ds, FeatureKind::tfidf, spec));
    return std::make_shared<Router>(deserialize_model(bytes), sha256_hex(bytes));
}

class ServeTest : public ::testing::Test {
protected:
    static void SetUpTestSuite() { router_ = small_router(); }
    static void TearDownTestSuite() { router_.reset(); }

    void SetUp() override {
        ServeOptions opt;
        opt.batch_cap = 4;
        opt.access_log = &log_;
        service_ = std::make_unique<RoutingService>(router_, opt);
        port_ = service_->bind_any_port("127.0.0.1");
        ASSERT_GT(port_, 0);
        thread_ = std::thread([this] { service_->listen_after_bind(); });
        service_->wait_until_ready();
    }

    void TearDown() override {
        service_->stop();
        thread_.join();
    }

    httplib::Result post(const std::string& body) {
        httplib::Client c("127.0.0.1", port_);
        return c.Post("/route", body, "application/json");
    }

    static std::shared_ptr<const Router> router_;
    std::ostringstream log_;
    std::unique_ptr<RoutingService> service_;
    int port_ = 0;
    std::thread thread_;
};

std::shared_ptr<const Router> ServeTest::router_;

} // namespace

TEST_F(ServeTest, SingleQueryMatchesRouter) {
    const std::string q = "Summarize the main themes across the collection";
    auto res = post(json{{"query", q}}.dump());
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 200);
    const auto j = json::parse(res->body);
    const auto expect = router_->route(q);
    EXPECT_EQ(j.dump(), json::parse(expect.to_json().dump()).dump());
    const std::string label = j["label"];
    const auto l = parse_label(label);
    EXPECT_EQ(j["paradigm"], RoutingPolicy{}.map_label(l));
    EXPECT_EQ(j["cost_ratio"].get<double>(), CostTable{}.cost(j["paradigm"]));
    EXPECT_EQ(j["model_id"], router_->model_id());
    EXPECT_EQ(j["score_kind"], "probability");
    double best = -1;
    std::string arg;
    for (Label c : kAllLabels) {
        const double s = j["scores"][std::string(to_string(c))];
        if (s > best) {
            best = s;
            arg = to_string(c);
        }
    }
    EXPECT_EQ(arg, label);
}

TEST_F(ServeTest, BadRequests) {
    for (const std::string body : {R"({"query": ""})", R"({"query": "   "})", R"({"q": "x"})", "not json", "[1,2]",
                                   R"({"query": 5})", R"({"queries": []})", R"({"queries": ["a", 3]})",
                                   R"({"vector": [1, 2]})"}) {
        auto res = post(body);
        ASSERT_TRUE(res);
        EXPECT_EQ(res->status, 400) << body;
        EXPECT_TRUE(json::parse(res->body).contains("error")) << body;
    }
}

TEST_F(ServeTest, BatchCapAndBatchOrder) {
    auto over = post(json{{"queries", {"a b", "c d", "e f", "g h", "i j"}}}.dump());
    ASSERT_TRUE(over);
    EXPECT_EQ(over->status, 413);
    const std::vector<std::string> qs{"Who wrote the charter?", "Summarize the main findings of the corpus",
                                      "Why did the treaty fail after the war?"};
    auto res = post(json{{"queries", qs}}.dump());
    ASSERT_TRUE(res);
    ASSERT_EQ(res->status, 200);
    const auto j = json::parse(res->body);
    ASSERT_EQ(j["responses"].size(), 3u);
    for (std::size_t i = 0; i < qs.size(); ++i)
        EXPECT_EQ(j["responses"][i].dump(), json::parse(router_->route(qs[i]).to_json().dump()).dump());
}

TEST_F(ServeTest, ConcurrentIdenticalRequestsAgree) {
    const std::string body = json{{"query", "Which hospital treated the patient first?"}}.dump();
    std::vector<std::future<std::string>> futs;
    for (int i = 0; i < 100; ++i)
        futs.push_back(std::async(std::launch::async, [&] {
            auto r = post(body);
            if (!r) return "FAILED " + httplib::to_string(r.error());
            return r->status == 200 ? r->body : "FAILED status " + std::to_string(r->status);
        }));
    std::set<std::string> distinct;
    for (auto& f : futs) distinct.insert(f.get());
    ASSERT_EQ(distinct.size(), 1u) << *distinct.begin() << "\n" << *distinct.rbegin();
    EXPECT_NE(*distinct.begin(), "FAILED");
}

TEST_F(ServeTest, HealthzAndAccessLog) {
    httplib::Client c("127.0.0.1", port_);
    auto res = c.Get("/healthz");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 200);
    const auto j = json::parse(res->body);
    EXPECT_EQ(j["status"], "ok");
    EXPECT_EQ(j["model_id"], router_->model_id());
    EXPECT_EQ(router_->model_id().size(), 64u);
    post(json{{"query", "Who founded the guild?"}}.dump());
    service_->stop();
    thread_.join();
    thread_ = std::thread([] {});
    std::istringstream lines(log_.str());
    std::string line;
    std::vector<json> entries;
    while (std::getline(lines, line)) entries.push_back(json::parse(line));
    ASSERT_EQ(entries.size(), 2u);
    EXPECT_EQ(entries[0]["path"], "/healthz");
    EXPECT_EQ(entries[1]["path"], "/route");
    EXPECT_EQ(entries[1]["status"], 200);
    for (const auto& e : entries) {
        EXPECT_TRUE(e.contains("ts"));
        EXPECT_GE(e["latency_ms"].get<double>(), 0.0);
    }
}

TEST(Serve, ParseBind) {
    const auto b = parse_bind("0.0.0.0:9000");
    EXPECT_EQ(b.host, "0.0.0.0");
    EXPECT_EQ(b.port, 9000);
    for (const char* bad : {"9000", ":9000", "host:", "host:abc", "host:70000", "host:-1", "host:80x"})
        EXPECT_THROW(parse_bind(bad), UsageError) << bad;
}

TEST(Serve, RouterRejectsModelWithoutPipeline) {
    TrainedModel m;
    EXPECT_THROW(Router(m, "x"), DataError);
}
