// qroute: command-line front end for the query-type router.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qroute/qroute.hpp"
#include "qroute/serve.hpp"

namespace fs = std::filesystem;
using namespace qroute;

namespace {

struct SharedFlags {
    std::string config, data, out, regime, classifier, embeddings;
    std::uint64_t seed = 0;
    std::size_t k = 0;
    std::size_t threads = 0;
    bool fallback = false;
    std::map<std::string, CLI::Option*> given;

    bool has(const std::string& name) const {
        auto it = given.find(name);
        return it != given.end() && it->second->count() > 0;
    }
};

void add_shared(CLI::App* cmd, SharedFlags& f) {
    f.given["config"] = cmd->add_option("--config", f.config, "JSON run configuration (dotted keys)");
    f.given["data"] = cmd->add_option("--data", f.data, "dataset file (JSON lines)");
    f.given["out"] = cmd->add_option("--out", f.out, "output directory");
    f.given["seed"] = cmd->add_option("--seed", f.seed, "random seed");
    f.given["regime"] = cmd->add_option("--regime", f.regime, "tfidf | embedding | structural");
    f.given["classifier"] = cmd->add_option("--classifier", f.classifier, "logreg | svm_rbf | random_forest | knn | mlp");
    f.given["k"] = cmd->add_option("--k", f.k, "number of cross-validation folds");
    f.given["embeddings"] = cmd->add_option("--embeddings", f.embeddings, "embedding file (id<TAB>v1..vd)");
    f.given["fallback"] = cmd->add_flag("--fallback-embedder", f.fallback, "use the built-in hashing embedder");
    f.given["threads"] = cmd->add_option("--threads", f.threads, "worker threads (0: all cores)");
}

void require_file(const std::string& what, const std::string& path) {
    if (!fs::is_regular_file(path)) throw UsageError(what + " not found: " + path);
}

RunConfig build_config(const SharedFlags& f) {
    RunConfig c;
    if (f.has("config")) {
        require_file("config file", f.config);
        c = load_config(f.config);
    }
    if (f.has("data")) apply_setting(c, "data", f.data);
    if (f.has("out")) apply_setting(c, "out", f.out);
    if (f.has("seed")) apply_setting(c, "seed", f.seed);
    if (f.has("regime")) apply_setting(c, "regime", f.regime);
    if (f.has("classifier")) apply_setting(c, "classifier", f.classifier);
    if (f.has("k")) apply_setting(c, "k", f.k);
    if (f.has("embeddings")) apply_setting(c, "embeddings", f.embeddings);
    if (f.has("fallback")) apply_setting(c, "fallback_embedder", f.fallback);
    if (f.has("threads")) apply_setting(c, "threads", f.threads);
    c.validate();
    if (c.data) require_file("dataset", *c.data);
    if (c.embeddings) require_file("embeddings file", *c.embeddings);
    if (c.model) require_file("model file", *c.model);
    return c;
}

std::uint64_t require_seed(const RunConfig& c) {
    if (!c.seed) throw UsageError("this command is stochastic; set --seed or the config key \"seed\"");
    return *c.seed;
}

const std::string& require_data(const RunConfig& c) {
    if (!c.data) throw UsageError("no dataset given; use --data or the config key \"data\"");
    return *c.data;
}

fs::path require_out(const RunConfig& c) {
    if (!c.out) throw UsageError("no output directory given; use --out or the config key \"out\"");
    fs::create_directories(*c.out);
    return *c.out;
}

std::optional<EmbedderInfo> fallback_of(const RunConfig& c, std::uint64_t seed) {
    if (!c.fallback_embedder) return std::nullopt;
    return EmbedderInfo{true, c.fallback_dim, seed};
}

std::size_t threads_of(const RunConfig& c) { return c.threads == 0 ? default_thread_count() : c.threads; }

void write_text(const fs::path& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << body;
    if (!out.flush()) throw DataError("write failed for " + path.string());
}

template <typename F>
std::string render(F&& f) {
    std::ostringstream s;
    f(s);
    return s.str();
}

std::string full_precision(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// Writes table1/2/3 in text and CSV form; returns the text of tables 1 and 2.
std::string write_tables(const fs::path& dir, const GridResult& g) {
    const auto rows = grid_policy_rows(g);
    const std::size_t routers = rows.size() - 2;
    const std::string t1 = render([&](std::ostream& o) { render_grid_table(o, g, false); });
    const std::string t2 = render([&](std::ostream& o) { render_policy_table(o, rows, routers, false); });
    const std::string t3 = render([&](std::ostream& o) { render_domain_table(o, g, false); });
    write_text(dir / "table1.txt", t1);
    write_text(dir / "table2.txt", t2);
    write_text(dir / "table3.txt", t3);
    write_text(dir / "table1.csv", render([&](std::ostream& o) { render_grid_table(o, g, true); }));
    write_text(dir / "table2.csv", render([&](std::ostream& o) { render_policy_table(o, rows, routers, true); }));
    write_text(dir / "table3.csv", render([&](std::ostream& o) { render_domain_table(o, g, true); }));
    return t1 + "\n" + t2 + "\n" + t3;
}

GridOptions grid_options(const RunConfig& c, std::uint64_t seed) {
    GridOptions o;
    o.k = c.k;
    o.seed = seed;
    o.embeddings_path = c.embeddings;
    o.fallback_embedder = fallback_of(c, seed);
    o.threads = threads_of(c);
    o.spec_template = c.spec;
    o.table = c.table;
    o.policy = c.policy;
    o.baseline = c.baseline;
    return o;
}

// ---------------------------------------------------------------------------

int cmd_synth(const RunConfig& c, const std::optional<std::size_t>& per_label, const std::optional<double>& noise) {
    SyntheticOptions o = c.synth;
    o.seed = require_seed(c);
    if (per_label) o.n_per_label = {*per_label, *per_label, *per_label};
    if (noise) o.noise_rate = *noise;
    const fs::path dir = require_out(c);
    const Dataset ds = generate_synthetic(o);
    const fs::path path = dir / "synthetic.jsonl";
    save_dataset(path.string(), ds);
    const auto n = ds.label_counts();
    std::printf("wrote %s (%zu queries: %zu single_hop, %zu multi_hop, %zu summary)\n", path.c_str(), ds.size(),
                n[0], n[1], n[2]);
    return 0;
}

int cmd_split(const RunConfig& c) {
    const std::uint64_t seed = require_seed(c);
    const Dataset ds = load_dataset(require_data(c));
    const fs::path dir = require_out(c);
    const FoldAssignment folds = stratified_kfold(ds, c.k, seed);
    std::ostringstream s;
    s << "id,label,fold\n";
    for (std::size_t i = 0; i < ds.size(); ++i)
        s << csv_escape(ds[i].id) << ',' << to_string(ds[i].label) << ',' << folds.fold_of[i] << '\n';
    write_text(dir / "folds.csv", s.str());
    std::printf("wrote %s (%zu folds)\n", (dir / "folds.csv").c_str(), c.k);
    return 0;
}

int cmd_eval(const RunConfig& c) {
    const std::uint64_t seed = require_seed(c);
    const Dataset ds = load_dataset(require_data(c));
    const fs::path dir = require_out(c);

    CrossValidationOptions cv;
    cv.regime = c.regime;
    cv.spec = c.spec;
    cv.spec.seed = seed;
    cv.k = c.k;
    cv.seed = seed;
    cv.threads = threads_of(c);
    if (c.regime == FeatureKind::embedding) {
        cv.embeddings_path = c.embeddings;
        if (!c.embeddings) cv.fallback_embedder = fallback_of(c, seed);
    }
    EvalReport rep = cross_validate(ds, cv);

    GridResult g;
    g.options = grid_options(c, seed);
    g.truth_counts = ds.label_counts();
    for (const auto& [d, n] : ds.domain_counts()) g.domains.push_back(d);
    g.domains = ordered_domains(g.domains);
    g.cells.push_back({c.spec.family, c.regime, rep, {}});

    write_text(dir / "report.json", report_to_json(rep, c.table, c.policy, c.baseline).dump(2) + "\n");
    write_text(dir / "predictions.csv", render([&](std::ostream& o) { write_predictions_csv(o, rep); }));
    const std::string tables = write_tables(dir, g);
    std::cout << tables << '\n';
    std::printf("accuracy %s\nmacro_f1 %s\n", full_precision(rep.accuracy).c_str(),
                full_precision(rep.macro_f1).c_str());
    return 0;
}

int cmd_grid(const RunConfig& c) {
    const std::uint64_t seed = require_seed(c);
    const Dataset ds = load_dataset(require_data(c));
    if (!c.embeddings && !c.fallback_embedder)
        throw UsageError("grid needs --embeddings or an explicit --fallback-embedder");
    const fs::path dir = require_out(c);
    const fs::path pred_dir = dir / "predictions";
    fs::create_directories(pred_dir);

    std::size_t done = 0;
    auto t_last = std::chrono::steady_clock::now();
    const GridResult g = run_grid(ds, grid_options(c, seed), [&](const GridCell& cell) {
        const auto now = std::chrono::steady_clock::now();
        const double sec = std::chrono::duration<double>(now - t_last).count();
        t_last = now;
        ++done;
        if (cell.ok())
            std::fprintf(stderr, "[%2zu/15] %-13s %-10s macro-F1 %.3f (%.1fs)\n", done,
                         display_name(cell.family).data(), regime_title(cell.regime).c_str(), cell.report->macro_f1,
                         sec);
        else
            std::fprintf(stderr, "[%2zu/15] %-13s %-10s failed: %s\n", done, display_name(cell.family).data(),
                         regime_title(cell.regime).c_str(), cell.error.c_str());
    });

    write_text(dir / "grid.json", grid_to_json(g).dump(2) + "\n");
    for (const auto& cell : g.cells) {
        if (!cell.ok()) continue;
        const std::string name = std::string(to_string(cell.regime)) + "_" + std::string(to_string(cell.family)) + ".csv";
        write_text(pred_dir / name, render([&](std::ostream& o) { write_predictions_csv(o, *cell.report); }));
    }
    std::cout << write_tables(dir, g);
    std::size_t failed = 0;
    for (const auto& cell : g.cells) failed += !cell.ok();
    if (failed) std::fprintf(stderr, "%zu of %zu cells failed; see grid.json\n", failed, g.cells.size());
    return 0;
}

int cmd_train_full(const RunConfig& c) {
    const std::uint64_t seed = require_seed(c);
    const Dataset ds = load_dataset(require_data(c));
    const fs::path dir = require_out(c);
    ClassifierSpec spec = c.spec;
    spec.seed = seed;
    std::optional<std::string> emb = c.regime == FeatureKind::embedding ? c.embeddings : std::nullopt;
    const TrainedModel m = train_full(ds, c.regime, spec, emb, emb ? std::nullopt : fallback_of(c, seed));
    const std::string bytes = serialize_model(m);
    const fs::path path = dir / "model.json";
    write_text(path, bytes);
    std::printf("wrote %s (%s + %s, model id %s)\n", path.c_str(), std::string(to_string(c.regime)).c_str(),
                std::string(to_string(spec.family)).c_str(), sha256_hex(bytes).c_str());
    return 0;
}

int cmd_route(const RunConfig& c, const std::string& model_path, const std::vector<std::string>& queries_arg,
              const std::string& queries_file, bool text_output) {
    require_file("model file", model_path);
    std::vector<std::string> queries = queries_arg;
    if (!queries_file.empty()) {
        require_file("queries file", queries_file);
        std::ifstream in(queries_file);
        std::string line;
        while (std::getline(in, line)) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (!line.empty()) queries.push_back(line);
        }
    }
    if (queries.empty()) throw UsageError("no query given; pass query text or --queries <file>");
    const Router router = Router::from_file(model_path, c.table, c.policy);
    const auto responses = router.route_texts(queries);
    for (const auto& r : responses) {
        if (text_output) {
            std::printf("%s\t%s\t%s\t%s,%s,%s\n", std::string(to_string(r.label)).c_str(), r.paradigm.c_str(),
                        format_fixed(r.cost_ratio, 1).c_str(), full_precision(r.scores[0]).c_str(),
                        full_precision(r.scores[1]).c_str(), full_precision(r.scores[2]).c_str());
        } else {
            std::cout << r.to_json().dump() << '\n';
        }
    }
    return 0;
}

int cmd_cost(const RunConfig& c, const std::string& predictions_path) {
    std::vector<PolicyRow> rows;
    LabelCounts truth{};
    if (!predictions_path.empty()) {
        require_file("predictions file", predictions_path);
        std::ifstream in(predictions_path);
        const auto preds = read_predictions_csv(in);
        std::vector<Label> t, p;
        for (const auto& x : preds) {
            t.push_back(x.truth);
            p.push_back(x.predicted);
            ++truth[index_of(x.truth)];
        }
        rows.push_back(policy_report("Router (" + fs::path(predictions_path).filename().string() + ")", t, p, c.table,
                                     c.policy, c.baseline)
                           .front());
    } else {
        truth = load_dataset(require_data(c)).label_counts();
    }
    const std::size_t routers = rows.size();
    rows.push_back(majority_row(truth, c.table, c.policy, c.baseline));
    rows.push_back(perfect_label_row(truth, c.table, c.policy, c.baseline));
    const std::string text = render([&](std::ostream& o) { render_policy_table(o, rows, routers, false); });
    std::cout << text;
    std::printf("baseline %s (ratio %s)\n", c.baseline.c_str(), format_fixed(c.table.cost(c.baseline), 1).c_str());
    if (c.out) {
        const fs::path dir = require_out(c);
        write_text(dir / "cost.txt", text);
        write_text(dir / "cost.csv", render([&](std::ostream& o) { render_policy_table(o, rows, routers, true); }));
    }
    return 0;
}

int cmd_serve(const RunConfig& c, const std::string& model_path, const std::optional<std::string>& bind,
              const std::optional<std::size_t>& batch_cap) {
    require_file("model file", model_path);
    const BindAddress addr = parse_bind(bind.value_or(c.bind));
    auto router = std::make_shared<const Router>(Router::from_file(model_path, c.table, c.policy));
    ServeOptions so;
    so.batch_cap = batch_cap.value_or(c.batch_cap);
    if (so.batch_cap == 0) throw UsageError("batch cap must be positive");
    RoutingService svc(router, so);
    std::fprintf(stderr, "serving model %s on %s:%d\n", router->model_id().c_str(), addr.host.c_str(), addr.port);
    if (!svc.listen(addr)) throw DataError("cannot bind " + addr.host + ":" + std::to_string(addr.port));
    return 0;
}

int run(int argc, char** argv) {
    CLI::App app{"qroute: query-type routing for retrieval-augmented generation"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "show help for every command");

    SharedFlags synth_f, split_f, eval_f, grid_f, train_f, route_f, cost_f, serve_f;

    auto* synth = app.add_subcommand("synth", "generate a labelled synthetic corpus");
    add_shared(synth, synth_f);
    std::optional<std::size_t> per_label;
    std::optional<double> noise;
    synth->add_option("--per-label", per_label, "queries per label");
    synth->add_option("--noise", noise, "probability of drawing text from another label's templates");

    auto* split = app.add_subcommand("split", "write stratified fold assignments");
    add_shared(split, split_f);

    auto* eval = app.add_subcommand("eval", "cross-validate one classifier on one feature regime");
    add_shared(eval, eval_f);

    auto* grid = app.add_subcommand("grid", "cross-validate every classifier on every feature regime");
    add_shared(grid, grid_f);

    auto* trainc = app.add_subcommand("train-full", "train a routing model on the whole dataset");
    add_shared(trainc, train_f);

    auto* route = app.add_subcommand("route", "route queries with a trained model");
    add_shared(route, route_f);
    std::string route_model, queries_file;
    std::vector<std::string> queries;
    bool text_output = false;
    route->add_option("--model", route_model, "model file from train-full")->required();
    route->add_option("--queries", queries_file, "file with one query per line");
    route->add_flag("--text", text_output, "tab-separated output instead of JSON lines");
    route->add_option("query", queries, "query text");

    auto* cost = app.add_subcommand("cost", "savings against the most expensive paradigm");
    add_shared(cost, cost_f);
    std::string predictions_path;
    cost->add_option("--predictions", predictions_path, "per-query CSV from eval or grid");

    auto* serve = app.add_subcommand("serve", "serve a trained model over HTTP");
    add_shared(serve, serve_f);
    std::string serve_model;
    std::optional<std::string> bind;
    std::optional<std::size_t> batch_cap;
    serve->add_option("--model", serve_model, "model file from train-full")->required();
    serve->add_option("--bind", bind, "host:port");
    serve->add_option("--batch-cap", batch_cap, "largest accepted batch");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::fprintf(stderr, "qroute: error: %s\n", e.what());
        return 2;
    }

    if (*synth) return cmd_synth(build_config(synth_f), per_label, noise);
    if (*split) return cmd_split(build_config(split_f));
    if (*eval) return cmd_eval(build_config(eval_f));
    if (*grid) return cmd_grid(build_config(grid_f));
    if (*trainc) return cmd_train_full(build_config(train_f));
    if (*route) return cmd_route(build_config(route_f), route_model, queries, queries_file, text_output);
    if (*cost) return cmd_cost(build_config(cost_f), predictions_path);
    if (*serve) return cmd_serve(build_config(serve_f), serve_model, bind, batch_cap);
    return 2;
}

std::string one_line(std::string s) {
    for (char& ch : s)
        if (ch == '\n' || ch == '\r') ch = ' ';
    return s;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const UsageError& e) {
        std::fprintf(stderr, "qroute: usage error: %s\n", one_line(e.what()).c_str());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "qroute: error: %s\n", one_line(e.what()).c_str());
        return 1;
    }
}
