#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cmp/bounds.hpp"
#include "cmp/completion.hpp"
#include "cmp/model.hpp"
#include "cmp/relax.hpp"
#include "cmp/solver.hpp"
#include "cmp/specgraph.hpp"
#include "json.hpp"

namespace {

using namespace cmp;
using nlohmann::json;

std::vector<uint64_t> parse_seeds(const std::string& text) {
    std::vector<uint64_t> seeds;
    if (text.find(',') != std::string::npos) {
        std::stringstream ss(text);
        std::string tok;
        while (std::getline(ss, tok, ',')) seeds.push_back(std::stoull(tok));
    } else if (auto dots = text.find(".."); dots != std::string::npos) {
        const uint64_t lo = std::stoull(text.substr(0, dots));
        const uint64_t hi = std::stoull(text.substr(dots + 2));
        for (uint64_t s = lo; s <= hi; ++s) seeds.push_back(s);
    } else {
        const uint64_t n = std::stoull(text);
        for (uint64_t s = 1; s <= n; ++s) seeds.push_back(s);
    }
    if (seeds.empty()) throw CLI::ValidationError("--seeds", "empty seed list");
    return seeds;
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << text;
}

struct GenArgs {
    std::string family = "f1";
    int scheme = 1;
    int n1 = 2, n2 = 5, S = 5;
    double eps = 0.1;
    std::string seeds = "10";
    std::string out = ".";
};

int cmd_gen(const GenArgs& a) {
    const auto family = model::family_from_name(a.family);
    const auto seeds = parse_seeds(a.seeds);
    std::filesystem::create_directories(a.out);
    for (uint64_t seed : seeds) {
        const auto inst = model::make_instance(family, a.scheme, a.n1, a.n2, a.S, a.eps, seed);
        std::ostringstream name;
        name << a.family << "_" << inst.instance_type() << "_seed" << seed << ".json";
        const auto path = std::filesystem::path(a.out) / name.str();
        model::save_instance_file(inst, path.string());
        std::printf("wrote %s\n", path.c_str());
    }
    return 0;
}

struct BoundArgs {
    std::string in;
    std::vector<std::string> methods{"cpi"};
    double tol = 1e-7;
    int max_iter = 50000;
    std::string out;
    std::string dump;
};

solver::SolveSettings settings_from(double tol, int max_iter) {
    solver::SolveSettings s;
    s.eps_primal = s.eps_dual = s.eps_gap = tol;
    s.max_iterations = max_iter;
    return s;
}

int cmd_bound(const BoundArgs& a) {
    const auto inst = model::load_instance_file(a.in);
    const auto settings = settings_from(a.tol, a.max_iter);

    std::ostringstream csv;
    csv << "instance_type,seed,method,value,status,primal_res,dual_res,gap_res,"
           "build_seconds,solve_seconds\n";
    for (const auto& name : a.methods) {
        relax::ConicProgram program;
        solver::SolveResult result;
        double build_s = 0, solve_s = 0;
        if (name == "cpi" || name == "full_sdp" || name == "full_dnn") {
            auto run = bounds::run_lower(inst, bounds::lower_method_from_name(name), settings);
            program = std::move(run.program);
            result = std::move(run.result);
            build_s = run.build_seconds;
            solve_s = run.solve_seconds;
        } else if (name == "ddc" || name == "cps" || name == "cbc") {
            const auto method = name == "ddc"   ? bounds::InnerMethod::Ddc
                                : name == "cps" ? bounds::InnerMethod::Cps
                                                : bounds::InnerMethod::Cbc;
            auto run = bounds::run_inner(inst, method, settings);
            program = std::move(run.program);
            result = std::move(run.result);
            build_s = run.build_seconds;
            solve_s = run.solve_seconds;
        } else {
            throw CLI::ValidationError("--methods", "unknown method " + name);
        }
        std::printf("%s\n", program.describe().c_str());
        const char* status = result.status == solver::SolveStatus::Optimal ? "optimal"
                             : result.status == solver::SolveStatus::MaxIterations
                                 ? "max_iterations"
                                 : "suspected_infeasible";
        std::printf("%s: value %.10g (%s, %d iterations)\n", name.c_str(), result.objective,
                    status, result.iterations);
        csv << inst.instance_type() << "," << inst.source.seed << "," << name << ","
            << result.objective << "," << status << "," << result.residuals.primal << ","
            << result.residuals.dual << "," << result.residuals.gap << "," << build_s << ","
            << solve_s << "\n";
        if (!a.dump.empty()) write_file(a.dump + "_" + name + ".json", program.dump_json());
    }
    if (!a.out.empty()) write_file(a.out, csv.str());
    return 0;
}

struct BenchArgs {
    std::string family = "f1";
    int scheme = 1;
    int n1 = 2, n2 = 5, S = 5;
    double eps = 0.1;
    std::string seeds = "10";
    int workers = 1;
    double tol = 1e-7;
    int max_iter = 50000;
    bool no_oracle = false;
    std::string out = "bench";
};

int cmd_bench(const BenchArgs& a) {
    bounds::BenchSpec spec;
    spec.family = model::family_from_name(a.family);
    spec.scheme = a.scheme;
    spec.n1 = a.n1;
    spec.n2 = a.n2;
    spec.S = a.S;
    spec.eps = a.eps;
    spec.seeds = parse_seeds(a.seeds);

    bounds::GapConfig config;
    config.settings = settings_from(a.tol, a.max_iter);
    config.with_oracle = !a.no_oracle;

    const auto result = bounds::run_bench({spec}, config, a.workers);
    write_file(a.out + "_gaps.csv", bounds::gaps_csv(result));
    write_file(a.out + "_times.csv", bounds::times_csv(result));
    std::printf("wrote %s_gaps.csv and %s_times.csv\n", a.out.c_str(), a.out.c_str());
    const auto& agg = result.aggregates.front();
    std::printf("%s: mean gaps UB %.4f%% I %.4f%% IUB %.4f%% | solved UB %d/%d IUB %d/%d\n",
                agg.instance_type.c_str(), agg.mean_gap_ub, agg.mean_gap_inner,
                agg.mean_gap_iub, agg.solved_ub, agg.count, agg.solved_iub, agg.count);
    return 0;
}

struct GraphArgs {
    int n1 = 1, n2 = 2, S = 2;
};

int cmd_graph(const GraphArgs& a) {
    const auto g = specgraph::arrowhead_spec_graph(a.n1, a.n2, a.S);
    std::printf("arrowhead graph n1=%d n2=%d S=%d: %d vertices, %d edges\n", a.n1, a.n2, a.S,
                g.order(), g.num_edges());
    const auto cert = specgraph::is_chordal(g);
    if (cert.chordal) {
        std::printf("chordal: yes; perfect elimination order:");
        for (int v : cert.elimination_order) std::printf(" %d", v);
        std::printf("\n");
    } else {
        std::printf("chordal: no; chordless cycle:");
        for (int v : cert.chordless_cycle) std::printf(" %d", v);
        std::printf("\n");
    }
    std::printf("block-clique: %s\n", specgraph::is_block_clique(g) ? "yes" : "no");
    return 0;
}

struct CompleteArgs {
    std::string in;
    std::string method = "psd";
    std::string out;
};

components::ConnectedComponents cc_from_json(const json& j) {
    const int k = j.at("k").get<int>();
    const int m = j.at("m").get<int>();
    const int s = j.at("S").get<int>();
    components::ConnectedComponents cc(k, m, s);
    const auto& x = j.at("X");
    for (int r = 0; r < k; ++r)
        for (int c = r; c < k; ++c) cc.x_block().set(r, c, x[r * k + c].get<double>());
    for (int i = 0; i < s; ++i) {
        const auto& z = j.at("Z")[i];
        for (int r = 0; r < m; ++r)
            for (int c = 0; c < k; ++c) cc.set_z_entry(i, r, c, z[r * k + c].get<double>());
        const auto& y = j.at("Y")[i];
        for (int r = 0; r < m; ++r)
            for (int c = r; c < m; ++c) cc.y_block(i).set(r, c, y[r * m + c].get<double>());
    }
    return cc;
}

components::GroundCones cones_from_json(const json& j, int k, int m, int s) {
    components::GroundCones g;
    g.k = k;
    g.m = m;
    g.cone0 = j.value("cone0", std::string("nonneg")) == "free" ? components::ConeKind::Free
                                                                : components::ConeKind::Nonneg;
    g.cones.assign(s, components::ConeKind::Nonneg);
    if (j.contains("cones"))
        for (int i = 0; i < s; ++i)
            if (j.at("cones")[i].get<std::string>() == "free")
                g.cones[i] = components::ConeKind::Free;
    return g;
}

int cmd_complete(const CompleteArgs& a) {
    std::ifstream in(a.in);
    if (!in) throw std::runtime_error("cannot open component file: " + a.in);
    json j = json::parse(in);

    linalg::SymMat full;
    specgraph::PartialMatrix partial;
    completion::VerifyMode mode = completion::VerifyMode::Dnn;
    auto pick_mode = [&](const components::GroundCones& cones) {
        mode = completion::VerifyMode::Dnn;
        if (cones.cone0 == components::ConeKind::Free) mode = completion::VerifyMode::Psd;
        for (auto ck : cones.cones)
            if (ck == components::ConeKind::Free) mode = completion::VerifyMode::Psd;
    };

    if (a.method == "psd" || a.method == "ddc") {
        auto cc = cc_from_json(j);
        const auto cones = cones_from_json(j, cc.k(), cc.m(), cc.scenarios());
        pick_mode(cones);
        if (a.method == "psd") {
            full = completion::psd_complete_arrowhead(cc);
            mode = completion::VerifyMode::Psd;
        } else {
            full = completion::ddc_complete(cc);
        }
        partial = components::gamma_partial(cc);
    } else if (a.method == "cpp") {
        const int k = j.at("k").get<int>();
        const int m = j.at("m").get<int>();
        const int s = j.at("S").get<int>();
        const auto cones = cones_from_json(j, k, m, s);
        pick_mode(cones);
        const auto& xb = j.at("xbar");
        const int r = static_cast<int>(xb.size()) / k;
        linalg::Matrix xbar(k, r);
        for (int i = 0; i < k * r; ++i) xbar.data()[i] = xb[i].get<double>();
        std::vector<linalg::Matrix> ybars;
        for (int i = 0; i < s; ++i) {
            linalg::Matrix y(m, r);
            for (int t = 0; t < m * r; ++t) y.data()[t] = j.at("ybars")[i][t].get<double>();
            ybars.push_back(std::move(y));
        }
        full = completion::cpp_complete_coordinated(xbar, ybars, cones);
        const auto cc = components::gamma_inv(full, k, m, s);
        partial = components::gamma_partial(cc);
    } else if (a.method == "cbc") {
        const int m = j.at("m").get<int>();
        const int s = j.at("S").get<int>();
        const auto cones = cones_from_json(j, 1, m, s);
        pick_mode(cones);
        const double x0 = j.at("x0").get<double>();
        std::vector<completion::CbcScenarioFactors> factors(s);
        for (int i = 0; i < s; ++i) {
            const auto& fj = j.at("factors")[i];
            for (const auto& f0 : fj.at("f0")) factors[i].f0.push_back(f0.get<double>());
            for (const auto& fv : fj.at("f")) factors[i].f.push_back(fv.get<linalg::Vec>());
        }
        full = completion::cbc_complete(x0, factors, cones);
        const auto cc = components::gamma_inv(full, 1, m, s);
        partial = components::gamma_partial(cc);
    } else {
        throw CLI::ValidationError("--method", "unknown completion method " + a.method);
    }

    const auto report = completion::verify_completion(partial, full, mode);
    json out;
    out["order"] = full.order();
    json mat = json::array();
    const auto dense = full.dense();
    for (double v : dense.data()) mat.push_back(v);
    out["matrix"] = mat;
    out["verification"] = {{"ok", report.ok()},
                           {"lambda_min", report.lambda_min},
                           {"max_entry_mismatch", report.max_entry_mismatch},
                           {"min_entry", report.min_entry},
                           {"violations", report.violations.size()}};
    const std::string text = out.dump(1);
    if (a.out.empty())
        std::printf("%s\n", text.c_str());
    else
        write_file(a.out, text);
    std::fprintf(stderr, "verification %s (lambda_min %.3g, mismatch %.3g)\n",
                 report.ok() ? "ok" : "FAILED", report.lambda_min, report.max_entry_mismatch);
    return report.ok() ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"sparse conic relaxations of two-stage QCQPs"};
    app.require_subcommand(1);

    GenArgs gen;
    auto* cgen = app.add_subcommand("gen", "generate instance files");
    cgen->add_option("--family", gen.family, "f1|f2|f3")->required();
    cgen->add_option("--scheme", gen.scheme, "1|2");
    cgen->add_option("--n1", gen.n1);
    cgen->add_option("--n2", gen.n2);
    cgen->add_option("--S", gen.S);
    cgen->add_option("--eps", gen.eps, "scheme-1 scenario radius");
    cgen->add_option("--seeds", gen.seeds, "N, lo..hi, or comma list");
    cgen->add_option("--out", gen.out, "output directory");

    BoundArgs bound;
    auto* cbound = app.add_subcommand("bound", "solve relaxations of one instance");
    cbound->add_option("--in", bound.in, "instance json")->required();
    cbound->add_option("--methods", bound.methods, "cpi, full_sdp, full_dnn, ddc, cps, cbc")
        ->delimiter(',');
    cbound->add_option("--tol", bound.tol);
    cbound->add_option("--max-iter", bound.max_iter);
    cbound->add_option("--out", bound.out, "csv path");
    cbound->add_option("--dump", bound.dump, "program dump prefix");

    BenchArgs bench;
    auto* cbench = app.add_subcommand("bench", "gap benchmark over seeds");
    cbench->add_option("--family", bench.family)->required();
    cbench->add_option("--scheme", bench.scheme);
    cbench->add_option("--n1", bench.n1);
    cbench->add_option("--n2", bench.n2);
    cbench->add_option("--S", bench.S);
    cbench->add_option("--eps", bench.eps);
    cbench->add_option("--seeds", bench.seeds);
    cbench->add_option("--workers", bench.workers);
    cbench->add_option("--tol", bench.tol);
    cbench->add_option("--max-iter", bench.max_iter);
    cbench->add_flag("--no-oracle", bench.no_oracle);
    cbench->add_option("--out", bench.out, "output prefix");

    GraphArgs graph;
    auto* cgraph = app.add_subcommand("graph", "arrowhead specification-graph analysis");
    cgraph->add_option("--n1", graph.n1);
    cgraph->add_option("--n2", graph.n2);
    cgraph->add_option("--S", graph.S);

    CompleteArgs complete;
    auto* ccomplete = app.add_subcommand("complete", "run a matrix completion");
    ccomplete->add_option("--in", complete.in, "component json")->required();
    ccomplete->add_option("--method", complete.method, "psd|cpp|cbc|ddc");
    ccomplete->add_option("--out", complete.out, "output json path");

    try {
        app.parse(argc, argv);
        if (cgen->parsed()) return cmd_gen(gen);
        if (cbound->parsed()) return cmd_bound(bound);
        if (cbench->parsed()) return cmd_bench(bench);
        if (cgraph->parsed()) return cmd_graph(graph);
        if (ccomplete->parsed()) return cmd_complete(complete);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "numeric error: %s\n", e.what());
        return 2;
    }
    return 0;
}
