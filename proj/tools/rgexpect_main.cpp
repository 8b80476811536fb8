// Batch front end: reads a config file, runs one experiment per invocation and
// emits CSV. Exit codes: 0 success / all checks pass, 1 a check failed,
// 2 configuration or runtime error.

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "rgexpect.h"

namespace {

struct Config {
    std::map<std::string, std::string> kv;

    bool has(const std::string& key) const { return kv.count(key) != 0; }

    std::string get(const std::string& key, const std::string& fallback) const {
        const auto it = kv.find(key);
        return it == kv.end() ? fallback : it->second;
    }

    double num(const std::string& key, double fallback) const {
        const auto it = kv.find(key);
        if (it == kv.end()) return fallback;
        try {
            std::size_t used = 0;
            const double v = std::stod(it->second, &used);
            if (used != it->second.size()) throw std::invalid_argument("trailing characters");
            return v;
        } catch (const std::exception&) {
            throw std::runtime_error("config field '" + key + "' is not a number: '" +
                                     it->second + "'");
        }
    }

    long integer(const std::string& key, long fallback) const {
        const double v = num(key, static_cast<double>(fallback));
        const long r = static_cast<long>(v);
        if (static_cast<double>(r) != v)
            throw std::runtime_error("config field '" + key + "' must be an integer");
        return r;
    }
};

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

Config load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    Config cfg;
    std::string line, section;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[' && line.back() == ']') {
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("config line is not 'key = value': " + line);
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw std::runtime_error("empty config key in line: " + line);
        cfg.kv[section.empty() ? key : section + "." + key] = value;
    }
    return cfg;
}

void apply_overrides(Config& cfg, int argc, char** argv, int first) {
    for (int i = first; i < argc; ++i) {
        std::string arg = argv[i];
        if (arg.rfind("--", 0) != 0)
            throw std::runtime_error("unexpected argument: " + arg +
                                     " (overrides look like --section.key=value)");
        arg = arg.substr(2);
        const auto eq = arg.find('=');
        std::string key, value;
        if (eq != std::string::npos) {
            key = arg.substr(0, eq);
            value = arg.substr(eq + 1);
        } else {
            if (i + 1 >= argc) throw std::runtime_error("missing value for override --" + arg);
            key = arg;
            value = argv[++i];
        }
        if (key.find('.') == std::string::npos)
            throw std::runtime_error("override key must be section.key: " + key);
        cfg.kv[key] = value;
    }
}

// "x:y, x:y, ..." -> interleaved pairs
std::vector<double> parse_pairs(const std::string& text, const std::string& field) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        const auto colon = item.find(':');
        if (colon == std::string::npos)
            throw std::runtime_error("config field '" + field + "' needs x:y pairs");
        out.push_back(std::stod(trim(item.substr(0, colon))));
        out.push_back(std::stod(trim(item.substr(colon + 1))));
    }
    if (out.empty()) throw std::runtime_error("config field '" + field + "' is empty");
    return out;
}

[[noreturn]] void die_api(const std::string& where) {
    throw std::runtime_error(where + ": " + rgx_last_error());
}

struct DomainHandle {
    rgx_domain* d = nullptr;
    ~DomainHandle() { rgx_domain_free(d); }
};
struct PayoffHandle {
    rgx_payoff* p = nullptr;
    ~PayoffHandle() { rgx_payoff_free(p); }
};
struct SolutionHandle {
    rgx_solution* s = nullptr;
    ~SolutionHandle() { rgx_solution_free(s); }
};
struct PdeHandle {
    rgx_pde* p = nullptr;
    ~PdeHandle() { rgx_pde_free(p); }
};
struct ReportHandle {
    rgx_report* r = nullptr;
    ~ReportHandle() { rgx_report_free(r); }
};

void make_domain(const Config& cfg, DomainHandle* out) {
    const std::string kind = cfg.get("domain.kind", "constant");
    rgx_status st = RGX_OK;
    if (kind == "constant") {
        st = rgx_domain_create_constant(cfg.num("domain.lo", 1.0), cfg.num("domain.hi", 4.0),
                                        &out->d);
    } else if (kind == "state") {
        const auto a = parse_pairs(cfg.get("domain.a_table", ""), "domain.a_table");
        const auto b = parse_pairs(cfg.get("domain.b_table", ""), "domain.b_table");
        std::vector<double> axs, ays, bxs, bys;
        for (std::size_t i = 0; i < a.size(); i += 2) {
            axs.push_back(a[i]);
            ays.push_back(a[i + 1]);
        }
        for (std::size_t i = 0; i < b.size(); i += 2) {
            bxs.push_back(b[i]);
            bys.push_back(b[i + 1]);
        }
        st = rgx_domain_create_state(axs.data(), ays.data(), static_cast<int64_t>(axs.size()),
                                     bxs.data(), bys.data(), static_cast<int64_t>(bxs.size()),
                                     &out->d);
    } else if (kind == "path") {
        st = rgx_domain_create_path(cfg.num("domain.a0", 1.0), cfg.num("domain.a_coef", 0.2),
                                    cfg.num("domain.b0", 4.0), cfg.num("domain.b_coef", 0.0),
                                    cfg.num("domain.cap", 1.0), &out->d);
    } else {
        throw std::runtime_error("config field 'domain.kind' must be constant, state or path");
    }
    if (st != RGX_OK) die_api("domain");
}

void make_payoff(const Config& cfg, const DomainHandle& dom, PayoffHandle* out) {
    const std::string name = cfg.get("payoff.name", "terminal_square");
    std::vector<double> params;
    if (name == "custom_table")
        params = parse_pairs(cfg.get("payoff.table", ""), "payoff.table");
    const rgx_status st = rgx_payoff_create(
        name.c_str(), params.empty() ? nullptr : params.data(),
        static_cast<int64_t>(params.size()), cfg.num("grid.T", 1.0),
        static_cast<int>(cfg.integer("grid.N", 8)), rgx_domain_vol_bound(dom.d), &out->p);
    if (st != RGX_OK) die_api("payoff");
}

struct Out {
    std::ostream* stream = &std::cout;
    std::ofstream file;
    int precision = 17;

    void open(const Config& cfg) {
        precision = static_cast<int>(cfg.integer("output.precision", 17));
        const std::string path = cfg.get("output.csv", "");
        if (!path.empty()) {
            file.open(path);
            if (!file) throw std::runtime_error("cannot open output file: " + path);
        }
    }
    void line(const std::string& s) {
        *stream << s << "\n";
        if (file.is_open()) file << s << "\n";
    }
    std::string fmt(double v) const {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.*g", precision, v);
        return buf;
    }
};

int cmd_solve(const Config& cfg, Out& out) {
    DomainHandle dom;
    make_domain(cfg, &dom);
    PayoffHandle pay;
    make_payoff(cfg, dom, &pay);
    SolutionHandle sol;
    if (rgx_tree_solve(pay.p, dom.d, cfg.num("grid.T", 1.0),
                       static_cast<int>(cfg.integer("grid.N", 8)), cfg.num("solver.delta", 0.0),
                       static_cast<int>(cfg.integer("solver.M", 9)), &sol.s) != RGX_OK)
        die_api("solve");
    const int steps = rgx_solution_steps(sol.s);
    long max_level = cfg.integer("output.max_level", -1);
    if (max_level < 0 || max_level > steps) max_level = steps;
    out.line("level,node,value");
    std::vector<double> buf;
    for (int k = 0; k <= max_level; ++k) {
        buf.resize(std::size_t{1} << k);
        if (rgx_solution_values(sol.s, k, buf.data(), static_cast<int64_t>(buf.size())) != RGX_OK)
            die_api("solution values");
        for (std::size_t i = 0; i < buf.size(); ++i)
            out.line(std::to_string(k) + "," + std::to_string(i) + "," + out.fmt(buf[i]));
    }
    out.line("# root = " + out.fmt(rgx_solution_root(sol.s)));
    return 0;
}

int cmd_pde(const Config& cfg, Out& out) {
    DomainHandle dom;
    make_domain(cfg, &dom);
    PayoffHandle pay;
    make_payoff(cfg, dom, &pay);
    PdeHandle pde;
    if (rgx_pde_solve(pay.p, dom.d, cfg.num("grid.T", 1.0), cfg.num("pde.dx", 0.02),
                      cfg.num("pde.cfl", 0.5), 0.5 * cfg.num("pde.x_width", 0.0),
                      cfg.num("solver.delta", 0.0), static_cast<int>(cfg.integer("pde.snapshots", 8)),
                      &pde.p) != RGX_OK)
        die_api("pde");
    const int64_t cols = rgx_pde_columns(pde.p);
    std::vector<double> xs(static_cast<std::size_t>(cols));
    if (rgx_pde_grid(pde.p, xs.data(), cols) != RGX_OK) die_api("pde grid");
    out.line("t,x,u");
    std::vector<double> slice(static_cast<std::size_t>(cols));
    for (int64_t s = 0; s < rgx_pde_snapshots(pde.p); ++s) {
        double t = 0.0;
        if (rgx_pde_slice(pde.p, s, &t, slice.data(), cols) != RGX_OK) die_api("pde slice");
        for (int64_t i = 0; i < cols; ++i)
            out.line(out.fmt(t) + "," + out.fmt(xs[static_cast<std::size_t>(i)]) + "," +
                     out.fmt(slice[static_cast<std::size_t>(i)]));
    }
    out.line("# u0 = " + out.fmt(rgx_pde_value(pde.p)));
    return 0;
}

int cmd_compare(const Config& cfg, Out& out) {
    DomainHandle dom;
    make_domain(cfg, &dom);
    PayoffHandle pay;
    make_payoff(cfg, dom, &pay);
    double tree = 0.0, pde = 0.0, gap = 0.0;
    if (rgx_compare(pay.p, dom.d, cfg.num("grid.T", 1.0),
                    static_cast<int>(cfg.integer("grid.N", 8)), cfg.num("solver.delta", 0.0),
                    static_cast<int>(cfg.integer("solver.M", 9)), cfg.num("pde.dx", 0.02),
                    cfg.num("pde.cfl", 0.5), 0.5 * cfg.num("pde.x_width", 0.0), &tree, &pde,
                    &gap) != RGX_OK)
        die_api("compare");
    out.line("tree_v0,pde_u0,gap,T,N,delta,M,dx,cfl");
    out.line(out.fmt(tree) + "," + out.fmt(pde) + "," + out.fmt(gap) + "," +
             out.fmt(cfg.num("grid.T", 1.0)) + "," + std::to_string(cfg.integer("grid.N", 8)) +
             "," + out.fmt(cfg.num("solver.delta", 0.0)) + "," +
             std::to_string(cfg.integer("solver.M", 9)) + "," + out.fmt(cfg.num("pde.dx", 0.02)) +
             "," + out.fmt(cfg.num("pde.cfl", 0.5)));
    return 0;
}

int cmd_mc(const Config& cfg, Out& out) {
    DomainHandle dom;
    make_domain(cfg, &dom);
    PayoffHandle pay;
    make_payoff(cfg, dom, &pay);
    const std::string model_name = cfg.get("mc.model", "binomial");
    if (model_name != "binomial" && model_name != "gaussian")
        throw std::runtime_error("config field 'mc.model' must be binomial or gaussian");
    const int model = model_name == "gaussian" ? 1 : 0;
    const auto n = static_cast<uint64_t>(cfg.integer("mc.n", 100000));
    const auto seed = static_cast<uint64_t>(cfg.integer("mc.seed", 42));
    const int stratified = cfg.get("mc.stratified", "0") == "1" ? 1 : 0;
    double mean = 0.0, se = 0.0;
    uint64_t violations = 0;
    const std::string policy = cfg.get("mc.policy", "optimal");
    if (policy == "optimal") {
        SolutionHandle sol;
        if (rgx_tree_solve(pay.p, dom.d, cfg.num("grid.T", 1.0),
                           static_cast<int>(cfg.integer("grid.N", 8)),
                           cfg.num("solver.delta", 0.0),
                           static_cast<int>(cfg.integer("solver.M", 9)), &sol.s) != RGX_OK)
            die_api("solve");
        if (rgx_mc_simulate(sol.s, pay.p, n, seed, model, stratified, &mean, &se, &violations) !=
            RGX_OK)
            die_api("mc");
    } else if (policy == "constant") {
        if (rgx_mc_simulate_constant(dom.d, cfg.num("mc.alpha", 1.0), pay.p,
                                     cfg.num("grid.T", 1.0),
                                     static_cast<int>(cfg.integer("grid.N", 8)), n, seed, model,
                                     &mean, &se, &violations) != RGX_OK)
            die_api("mc");
    } else {
        throw std::runtime_error("config field 'mc.policy' must be optimal or constant");
    }
    const uint64_t n_used =
        stratified ? (uint64_t{1} << cfg.integer("grid.N", 8)) : n; // stratified = one full sweep
    out.line("mean,std_error,n,seed,model,violations");
    out.line(out.fmt(mean) + "," + out.fmt(se) + "," + std::to_string(n_used) + "," +
             std::to_string(seed) + "," + model_name + "," + std::to_string(violations));
    return 0;
}

int cmd_check(const Config& cfg, Out& out) {
    DomainHandle dom;
    make_domain(cfg, &dom);
    PayoffHandle pay;
    make_payoff(cfg, dom, &pay);
    ReportHandle rep;
    if (rgx_check_run(pay.p, dom.d, cfg.num("grid.T", 1.0),
                      static_cast<int>(cfg.integer("grid.N", 8)), cfg.num("solver.delta", 0.0),
                      static_cast<int>(cfg.integer("solver.M", 9)),
                      static_cast<uint64_t>(cfg.integer("mc.seed", 42)), &rep.r) != RGX_OK)
        die_api("check");
    out.line("test,residual,pass");
    bool all = true;
    for (int64_t i = 0; i < rgx_report_rows(rep.r); ++i) {
        const char* name = nullptr;
        double residual = 0.0;
        int pass = 0;
        if (rgx_report_row(rep.r, i, &name, &residual, &pass) != RGX_OK) die_api("check row");
        all = all && pass;
        out.line(std::string(name) + "," + out.fmt(residual) + "," + (pass ? "1" : "0"));
    }
    return all ? 0 : 1;
}

int cmd_bench(const Config& cfg, Out& out) {
    DomainHandle dom;
    make_domain(cfg, &dom);
    PayoffHandle pay;
    make_payoff(cfg, dom, &pay);
    out.line("module,params,wall_ms");
    const auto timed = [&](const std::string& module, const std::string& params, auto&& fn) {
        const auto t0 = std::chrono::steady_clock::now();
        fn();
        const auto t1 = std::chrono::steady_clock::now();
        out.line(module + "," + params + "," +
                 out.fmt(std::chrono::duration<double, std::milli>(t1 - t0).count()));
    };
    const double T = cfg.num("grid.T", 1.0);
    const int N = static_cast<int>(cfg.integer("grid.N", 8));
    const double delta = cfg.num("solver.delta", 0.0);
    const int M = static_cast<int>(cfg.integer("solver.M", 9));
    timed("tree_solver", "N=" + std::to_string(N) + ";M=" + std::to_string(M), [&] {
        double v = 0.0;
        if (rgx_tree_root_value(pay.p, dom.d, T, N, delta, M, &v) != RGX_OK) die_api("bench solve");
    });
    const std::string kind = cfg.get("domain.kind", "constant");
    if (kind != "path") {
        timed("pde_solver", "dx=" + out.fmt(cfg.num("pde.dx", 0.02)), [&] {
            PdeHandle pde;
            if (rgx_pde_solve(pay.p, dom.d, T, cfg.num("pde.dx", 0.02), cfg.num("pde.cfl", 0.5),
                              0.5 * cfg.num("pde.x_width", 0.0), delta, 0, &pde.p) != RGX_OK)
                die_api("bench pde");
        });
    }
    timed("montecarlo", "n=" + std::to_string(cfg.integer("mc.n", 100000)), [&] {
        double mean = 0.0, se = 0.0;
        uint64_t violations = 0;
        if (rgx_mc_simulate_constant(dom.d, 0.5 * (rgx_domain_vol_bound(dom.d)), pay.p, T, N,
                                     static_cast<uint64_t>(cfg.integer("mc.n", 100000)),
                                     static_cast<uint64_t>(cfg.integer("mc.seed", 42)), 0, &mean,
                                     &se, &violations) != RGX_OK)
            die_api("bench mc");
    });
    return 0;
}

void usage() {
    std::cerr << "usage: rgexpect <solve|pde|compare|mc|check|bench> <config> "
                 "[--section.key=value ...]\n"
                 "environment: RGEXPECT_THREADS caps worker threads (0 = auto)\n";
}

} // namespace

int main(int argc, char** argv) {
    if (argc < 3) {
        usage();
        return 2;
    }
    const std::string command = argv[1];
    try {
        Config cfg = load_config(argv[2]);
        apply_overrides(cfg, argc, argv, 3);
        Out out;
        out.open(cfg);
        if (command == "solve") return cmd_solve(cfg, out);
        if (command == "pde") return cmd_pde(cfg, out);
        if (command == "compare") return cmd_compare(cfg, out);
        if (command == "mc") return cmd_mc(cfg, out);
        if (command == "check") return cmd_check(cfg, out);
        if (command == "bench") return cmd_bench(cfg, out);
        usage();
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "rgexpect: " << e.what() << "\n";
        return 2;
    }
}
