// infsa: command-line front-end for the attention-graph library.

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <infsa/attention_graph.hpp>
#include <infsa/bench.hpp>
#include <infsa/layers.hpp>
#include <infsa/markov.hpp>
#include <infsa/path_integral.hpp>
#include <infsa/tensor_io.hpp>
#include <infsa/validation.hpp>

namespace {

using infsa::Matrix;
using infsa::Vector;
using json = nlohmann::json;

enum class OutFormat { Table, Csv, Json };

struct GlobalOpts {
    std::string format = "table";
    std::uint64_t seed = 0;
    double eps = infsa::kDefaultEpsilon;
    double gamma = infsa::kDefaultGamma;

    OutFormat fmt() const {
        if (format == "csv") {
            return OutFormat::Csv;
        }
        if (format == "json") {
            return OutFormat::Json;
        }
        return OutFormat::Table;
    }
};

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string numShort(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

json matrixJson(const Matrix &m) {
    json rows = json::array();
    for (std::size_t i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (std::size_t j = 0; j < m.cols(); ++j) {
            row.push_back(m(i, j));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

json vectorJson(const Vector &v) {
    json arr = json::array();
    for (std::size_t i = 0; i < v.size(); ++i) {
        arr.push_back(v[i]);
    }
    return arr;
}

void printMatrix(const std::string &name, const Matrix &m, OutFormat fmt) {
    switch (fmt) {
    case OutFormat::Table:
        std::cout << name << " (" << m.rows() << "x" << m.cols() << "):\n";
        for (std::size_t i = 0; i < m.rows(); ++i) {
            for (std::size_t j = 0; j < m.cols(); ++j) {
                std::cout << (j ? " " : "  ") << numShort(m(i, j));
            }
            std::cout << "\n";
        }
        break;
    case OutFormat::Csv:
        for (std::size_t i = 0; i < m.rows(); ++i) {
            for (std::size_t j = 0; j < m.cols(); ++j) {
                std::cout << (j ? "," : "") << num(m(i, j));
            }
            std::cout << "\n";
        }
        break;
    case OutFormat::Json: {
        json out;
        out["name"] = name;
        out["rows"] = m.rows();
        out["cols"] = m.cols();
        out["data"] = matrixJson(m);
        std::cout << out.dump() << "\n";
        break;
    }
    }
}

void maybeStore(const std::string &path, const Matrix &m) {
    if (!path.empty()) {
        infsa::storeTensor(path, m);
    }
}

unsigned effectiveThreads(unsigned flag_value) {
    if (const char *env = std::getenv("INFSA_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1) {
            return static_cast<unsigned>(v);
        }
    }
    return flag_value >= 1 ? flag_value : 1;
}

/// Shared precheck for series commands so a diverging request fails with
/// the series error (not a bare range complaint) before any solve runs.
infsa::DecayFactor checkedDecay(const Matrix &a, double gamma) {
    const double rho = infsa::spectralRadiusEstimate(a);
    if (gamma * rho >= 1.0 - 1e-9) {
        throw infsa::DivergentSeriesError(
            "gamma * rho(A) = " + std::to_string(gamma * rho)
            + " >= 1: discounted series diverges");
    }
    return infsa::DecayFactor(gamma);
}

infsa::Activation parseActivation(const std::string &name) {
    if (name == "gelu") {
        return infsa::Activation::Gelu;
    }
    if (name == "abs") {
        return infsa::Activation::Abs;
    }
    if (name == "relu") {
        return infsa::Activation::ReLU;
    }
    throw infsa::Error("unknown activation '" + name + "'");
}

int cmdAffinity(const GlobalOpts &g, const std::string &input,
                const std::string &keys, const std::string &activation,
                const std::string &output) {
    const Matrix qm = infsa::loadMatrix(input);
    const Matrix km = keys.empty() ? qm : infsa::loadMatrix(keys);
    const infsa::AffinityMatrix a_hat =
        infsa::buildAffinity(infsa::TokenFeatures(qm), infsa::TokenFeatures(km),
                             g.eps, parseActivation(activation));
    maybeStore(output, a_hat.mat);
    if (g.fmt() == OutFormat::Table) {
        std::cout << "frobenius_norm: " << num(infsa::frobeniusNorm(a_hat.mat)) << "\n";
    }
    printMatrix("affinity", a_hat.mat, g.fmt());
    return 0;
}

int cmdKernel(const GlobalOpts &g, const std::string &input,
              const std::string &output) {
    const Matrix a = infsa::loadMatrix(input);
    const Matrix kernel = infsa::closedFormKernel(a, checkedDecay(a, g.gamma));
    maybeStore(output, kernel);
    printMatrix("kernel", kernel, g.fmt());
    return 0;
}

int cmdCentrality(const GlobalOpts &g, const std::string &input,
                  std::size_t per_depth) {
    const Matrix a = infsa::loadMatrix(input);
    const infsa::CentralityReport report =
        infsa::centralityReport(a, checkedDecay(a, g.gamma), per_depth);
    switch (g.fmt()) {
    case OutFormat::Table:
        std::cout << "token  centrality\n";
        for (std::size_t i = 0; i < report.scores.size(); ++i) {
            std::cout << i << "  " << numShort(report.scores[i]) << "\n";
        }
        for (std::size_t t = 0; t < report.per_depth.size(); ++t) {
            std::cout << "depth " << (t + 1) << ":";
            for (std::size_t i = 0; i < report.per_depth[t].size(); ++i) {
                std::cout << " " << numShort(report.per_depth[t][i]);
            }
            std::cout << "\n";
        }
        break;
    case OutFormat::Csv:
        std::cout << "token,centrality\n";
        for (std::size_t i = 0; i < report.scores.size(); ++i) {
            std::cout << i << "," << num(report.scores[i]) << "\n";
        }
        break;
    case OutFormat::Json: {
        json out;
        out["scores"] = vectorJson(report.scores);
        json depths = json::array();
        for (const Vector &v : report.per_depth) {
            depths.push_back(vectorJson(v));
        }
        out["per_depth"] = depths;
        std::cout << out.dump() << "\n";
        break;
    }
    }
    return 0;
}

int printSimulation(const GlobalOpts &g, const infsa::AbsorbingChain &chain,
                    std::size_t start, std::size_t walks, unsigned threads) {
    const Vector counts = infsa::simulateWalks(chain, start, walks, g.seed, threads);
    switch (g.fmt()) {
    case OutFormat::Table:
        std::cout << "token  mean_visits\n";
        for (std::size_t i = 0; i < counts.size(); ++i) {
            std::cout << i << "  " << num(counts[i]) << "\n";
        }
        break;
    case OutFormat::Csv:
        std::cout << "token,mean_visits\n";
        for (std::size_t i = 0; i < counts.size(); ++i) {
            std::cout << i << "," << num(counts[i]) << "\n";
        }
        break;
    case OutFormat::Json: {
        json out;
        out["start"] = start;
        out["walks"] = walks;
        out["seed"] = g.seed;
        out["mean_visits"] = vectorJson(counts);
        std::cout << out.dump() << "\n";
        break;
    }
    }
    return 0;
}

int cmdMarkov(const GlobalOpts &g, const std::string &input, bool simulate,
              std::size_t start, std::size_t walks, unsigned threads) {
    const Matrix a = infsa::loadMatrix(input);
    const infsa::AffinityMatrix a_hat(a, g.eps);
    const infsa::AbsorbingChain chain = infsa::buildAbsorbingChain(a_hat, g.gamma);
    if (simulate) {
        return printSimulation(g, chain, start, walks, threads);
    }
    const infsa::FundamentalMatrix fm = infsa::fundamentalMatrix(chain);
    const infsa::WalkCentralities cent = infsa::walkCentralities(fm);
    switch (g.fmt()) {
    case OutFormat::Table:
        std::cout << "token  absorb_prob  c_out  c_in\n";
        for (std::size_t i = 0; i < chain.nStates(); ++i) {
            std::cout << i << "  " << numShort(chain.r[i]) << "  "
                      << numShort(cent.c_out[i]) << "  " << numShort(cent.c_in[i])
                      << "\n";
        }
        break;
    case OutFormat::Csv:
        std::cout << "token,absorb_prob,c_out,c_in\n";
        for (std::size_t i = 0; i < chain.nStates(); ++i) {
            std::cout << i << "," << num(chain.r[i]) << "," << num(cent.c_out[i])
                      << "," << num(cent.c_in[i]) << "\n";
        }
        break;
    case OutFormat::Json: {
        json out;
        out["gamma"] = chain.gamma;
        out["absorb_prob"] = vectorJson(chain.r);
        out["c_out"] = vectorJson(cent.c_out);
        out["c_in"] = vectorJson(cent.c_in);
        out["fundamental"] = matrixJson(fm.n);
        std::cout << out.dump() << "\n";
        break;
    }
    }
    return 0;
}

int cmdSimulate(const GlobalOpts &g, const std::string &input, std::size_t start,
                std::size_t walks, unsigned threads) {
    const Matrix a = infsa::loadMatrix(input);
    const infsa::AffinityMatrix a_hat(a, g.eps);
    const infsa::AbsorbingChain chain = infsa::buildAbsorbingChain(a_hat, g.gamma);
    return printSimulation(g, chain, start, walks, threads);
}

int cmdFig3Demo(const GlobalOpts &g) {
    const infsa::AffinityMatrix fixture = infsa::multihopDemoFixture();
    const infsa::RankingComparison cmp =
        infsa::oneHopVsMultihopRanking(fixture, g.gamma);
    switch (g.fmt()) {
    case OutFormat::Table: {
        std::cout << "token  one_hop_score  katz_score\n";
        for (std::size_t i = 0; i < cmp.one_hop_scores.size(); ++i) {
            std::cout << i << "  " << numShort(cmp.one_hop_scores[i]) << "  "
                      << numShort(cmp.katz_scores[i]) << "\n";
        }
        std::cout << "one_hop ranking:";
        for (std::size_t t : cmp.one_hop_rank) {
            std::cout << " " << t;
        }
        std::cout << "\nkatz ranking:   ";
        for (std::size_t t : cmp.katz_rank) {
            std::cout << " " << t;
        }
        std::cout << "\n";
        break;
    }
    case OutFormat::Csv: {
        std::cout << "token,one_hop_score,katz_score,one_hop_position,katz_position\n";
        const std::size_t n = cmp.one_hop_scores.size();
        std::vector<std::size_t> pos_one(n), pos_katz(n);
        for (std::size_t p = 0; p < n; ++p) {
            pos_one[cmp.one_hop_rank[p]] = p;
            pos_katz[cmp.katz_rank[p]] = p;
        }
        for (std::size_t i = 0; i < n; ++i) {
            std::cout << i << "," << num(cmp.one_hop_scores[i]) << ","
                      << num(cmp.katz_scores[i]) << "," << pos_one[i] << ","
                      << pos_katz[i] << "\n";
        }
        break;
    }
    case OutFormat::Json: {
        json out;
        out["one_hop_scores"] = vectorJson(cmp.one_hop_scores);
        out["katz_scores"] = vectorJson(cmp.katz_scores);
        out["one_hop_rank"] = cmp.one_hop_rank;
        out["katz_rank"] = cmp.katz_rank;
        std::cout << out.dump() << "\n";
        break;
    }
    }
    return 0;
}

int cmdForward(const GlobalOpts &g, const std::string &variant_name,
               const std::string &input, std::size_t heads, std::size_t d_ff,
               const std::string &activation, const std::string &output) {
    const infsa::Variant variant = variant_name == "pure" ? infsa::Variant::Pure
                                                          : infsa::Variant::Linear;
    const Matrix xm = infsa::loadMatrix(input);
    const std::size_t d_model = xm.cols();
    if (heads == 0 || d_model % heads != 0) {
        throw infsa::ConfigError("forward: head count " + std::to_string(heads)
                                 + " must divide model dim " + std::to_string(d_model));
    }
    const infsa::MultiHeadConfig cfg{heads, d_model / heads, d_model};
    const std::size_t ff = d_ff > 0 ? d_ff : 4 * d_model;
    const infsa::BlockParams params = infsa::randomBlockParams(
        cfg, variant, g.seed, ff, 1.0 / std::sqrt(static_cast<double>(d_model)),
        g.gamma, g.eps, parseActivation(activation));
    const infsa::TokenFeatures out =
        infsa::multiheadBlockForward(infsa::TokenFeatures(xm), cfg, params, variant);
    maybeStore(output, out.mat);
    printMatrix("block_output[" + variant_name + "]", out.mat, g.fmt());
    return 0;
}

int cmdAlign(const GlobalOpts &g, const std::string &input, std::size_t samples,
             std::size_t tokens, std::size_t dim, std::size_t t_pow) {
    if (!input.empty()) {
        const infsa::TokenFeatures q(infsa::loadMatrix(input));
        const infsa::AlignmentSample s = infsa::eigenvectorAlignment(q, g.eps, t_pow);
        switch (g.fmt()) {
        case OutFormat::Table:
            if (s.degenerate) {
                std::cout << "degenerate sample (zero operator or zero scores)\n";
            } else {
                std::cout << "cosine:   " << num(s.cosine) << "\n";
                std::cout << "spearman: "
                          << (s.spearman_defined ? num(s.spearman) : "undefined")
                          << "\n";
            }
            break;
        case OutFormat::Csv:
            std::cout << "cosine,spearman,degenerate\n";
            std::cout << num(s.cosine) << ","
                      << (s.spearman_defined ? num(s.spearman) : "") << ","
                      << (s.degenerate ? 1 : 0) << "\n";
            break;
        case OutFormat::Json: {
            json out;
            out["cosine"] = s.cosine;
            if (s.spearman_defined) {
                out["spearman"] = s.spearman;
            }
            out["degenerate"] = s.degenerate;
            std::cout << out.dump() << "\n";
            break;
        }
        }
        return 0;
    }

    const infsa::AlignmentResult r =
        infsa::alignmentBatch(samples, tokens, dim, g.seed, g.eps, t_pow);
    switch (g.fmt()) {
    case OutFormat::Table:
        std::cout << "valid samples:   " << r.n_samples << "\n";
        std::cout << "degenerate:      " << r.n_degenerate << "\n";
        std::cout << "mean cosine:     " << num(r.cosine) << "\n";
        std::cout << "mean spearman:   " << num(r.spearman) << " (over "
                  << r.n_spearman << ")\n";
        break;
    case OutFormat::Csv:
        std::cout << "samples,degenerate,mean_cosine,mean_spearman\n";
        std::cout << r.n_samples << "," << r.n_degenerate << "," << num(r.cosine)
                  << "," << num(r.spearman) << "\n";
        break;
    case OutFormat::Json: {
        json out;
        out["n_samples"] = r.n_samples;
        out["n_degenerate"] = r.n_degenerate;
        out["mean_cosine"] = r.cosine;
        out["mean_spearman"] = r.spearman;
        out["n_spearman"] = r.n_spearman;
        std::cout << out.dump() << "\n";
        break;
    }
    }
    return 0;
}

int cmdGradcheck(const GlobalOpts &g, double step, double tol) {
    const std::vector<infsa::OpGradcheck> results =
        infsa::layerGradcheckSuite(g.seed, step);
    bool all_ok = true;
    switch (g.fmt()) {
    case OutFormat::Table:
        std::cout << "operation  max_rel_err\n";
        for (const auto &r : results) {
            std::cout << r.op << "  " << num(r.max_rel_err)
                      << (r.max_rel_err <= tol ? "" : "  EXCEEDS TOL") << "\n";
            all_ok = all_ok && r.max_rel_err <= tol;
        }
        break;
    case OutFormat::Csv:
        std::cout << "operation,max_rel_err\n";
        for (const auto &r : results) {
            std::cout << r.op << "," << num(r.max_rel_err) << "\n";
            all_ok = all_ok && r.max_rel_err <= tol;
        }
        break;
    case OutFormat::Json: {
        json out = json::array();
        for (const auto &r : results) {
            out.push_back({{"op", r.op}, {"max_rel_err", r.max_rel_err}});
            all_ok = all_ok && r.max_rel_err <= tol;
        }
        std::cout << out.dump() << "\n";
        break;
    }
    }
    return all_ok ? 0 : 1;
}

int cmdBench(const GlobalOpts &g, const std::string &variant_name,
             const std::vector<std::size_t> &sizes, std::size_t repeats,
             std::size_t dim, unsigned threads) {
    const infsa::BenchVariant variant = infsa::benchVariantFromName(variant_name);
    const infsa::BenchResult result =
        infsa::benchScaling(variant, sizes, repeats, g.seed, dim, threads);
    switch (g.fmt()) {
    case OutFormat::Table:
        std::cout << "variant  n_tokens  median_s  repeats\n";
        for (const auto &r : result.records) {
            std::cout << infsa::benchVariantName(r.variant) << "  " << r.n_tokens
                      << "  " << (r.oom ? "oom" : num(r.median_s)) << "  "
                      << r.repeats << "\n";
        }
        std::cout << "slope: " << num(result.slope) << "\n";
        break;
    case OutFormat::Csv:
        std::cout << "variant,n_tokens,median_s,repeats\n";
        for (const auto &r : result.records) {
            std::cout << infsa::benchVariantName(r.variant) << "," << r.n_tokens
                      << "," << (r.oom ? "oom" : num(r.median_s)) << ","
                      << r.repeats << "\n";
        }
        std::cout << "# slope," << num(result.slope) << "\n";
        break;
    case OutFormat::Json: {
        json out;
        json records = json::array();
        for (const auto &r : result.records) {
            records.push_back({{"variant", infsa::benchVariantName(r.variant)},
                               {"n_tokens", r.n_tokens},
                               {"median_s", r.median_s},
                               {"repeats", r.repeats},
                               {"oom", r.oom}});
        }
        out["records"] = records;
        out["slope"] = result.slope;
        std::cout << out.dump() << "\n";
        break;
    }
    }
    return 0;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"attention-graph centrality toolkit"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalOpts g;
    app.add_option("--format", g.format, "output format")
        ->check(CLI::IsMember({"table", "csv", "json"}))
        ->capture_default_str();
    app.add_option("--seed", g.seed, "random seed")->capture_default_str();
    app.add_option("--eps", g.eps, "normalization floor")->capture_default_str();
    app.add_option("--gamma", g.gamma, "path decay factor")->capture_default_str();

    // affinity
    auto *affinity = app.add_subcommand("affinity", "build the normalized affinity operator");
    std::string aff_input, aff_keys, aff_activation = "relu", aff_output;
    affinity->add_option("--input", aff_input, "query matrix (.inft)")->required();
    affinity->add_option("--keys", aff_keys, "key matrix (.inft), defaults to --input");
    affinity->add_option("--activation", aff_activation, "relu|gelu|abs")
        ->check(CLI::IsMember({"relu", "gelu", "abs"}));
    affinity->add_option("--output", aff_output, "store result (.inft)");

    // kernel
    auto *kernel = app.add_subcommand("kernel", "closed-form discounted path kernel");
    std::string ker_input, ker_output;
    kernel->add_option("--input", ker_input, "operator matrix (.inft)")->required();
    kernel->add_option("--output", ker_output, "store result (.inft)");

    // centrality
    auto *centrality = app.add_subcommand("centrality", "multi-hop token centrality scores");
    std::string cen_input;
    std::size_t cen_per_depth = 0;
    centrality->add_option("--input", cen_input, "operator matrix (.inft)")->required();
    centrality->add_option("--per-depth", cen_per_depth, "also report depth-t scores for t=1..T");

    // markov
    auto *markov = app.add_subcommand("markov", "absorbing-chain view: absorption and visit centralities");
    std::string mar_input;
    bool mar_simulate = false;
    std::size_t mar_start = 0, mar_walks = 100000;
    unsigned mar_threads = 1;
    markov->add_option("--input", mar_input, "affinity matrix (.inft)")->required();
    markov->add_flag("--simulate", mar_simulate, "run the Monte-Carlo estimator instead");
    markov->add_option("--start", mar_start, "start token for simulation");
    markov->add_option("--walks", mar_walks, "number of walks");
    markov->add_option("--threads", mar_threads, "worker threads (INFSA_THREADS overrides)");

    // simulate
    auto *simulate = app.add_subcommand("simulate", "Monte-Carlo visit counts for one start token");
    std::string sim_input;
    std::size_t sim_start = 0, sim_walks = 100000;
    unsigned sim_threads = 1;
    simulate->add_option("--input", sim_input, "affinity matrix (.inft)")->required();
    simulate->add_option("--start", sim_start, "start token");
    simulate->add_option("--walks", sim_walks, "number of walks");
    simulate->add_option("--threads", sim_threads, "worker threads (INFSA_THREADS overrides)");

    // fig3-demo
    auto *fig3 = app.add_subcommand("fig3-demo", "one-hop vs multi-hop ranking on the frozen 5-token graph");

    // forward
    auto *forward = app.add_subcommand("forward", "run one pre-LN block forward with seeded random weights");
    std::string fwd_variant, fwd_input, fwd_output, fwd_activation = "relu";
    std::size_t fwd_heads = 4, fwd_dff = 0;
    forward->add_option("variant", fwd_variant, "pure|linear")
        ->required()
        ->check(CLI::IsMember({"pure", "linear"}));
    forward->add_option("--input", fwd_input, "token matrix (.inft)")->required();
    forward->add_option("--heads", fwd_heads, "number of heads")->capture_default_str();
    forward->add_option("--dff", fwd_dff, "feed-forward width (default 4 * d_model)");
    forward->add_option("--activation", fwd_activation, "pure-head kernel gate: relu|gelu|abs")
        ->check(CLI::IsMember({"relu", "gelu", "abs"}));
    forward->add_option("--output", fwd_output, "store result (.inft)");

    // align
    auto *align = app.add_subcommand("align", "eigenvector-alignment protocol");
    std::string ali_input;
    std::size_t ali_samples = 100, ali_tokens = 16, ali_dim = 12, ali_tpow = 200;
    align->add_option("--input", ali_input, "single query matrix (.inft); otherwise synthesizes samples");
    align->add_option("--samples", ali_samples, "number of random samples")->capture_default_str();
    align->add_option("--tokens", ali_tokens, "tokens per sample")->capture_default_str();
    align->add_option("--dim", ali_dim, "per-head dimension")->capture_default_str();
    align->add_option("--tpow", ali_tpow, "power-iteration steps")->capture_default_str();

    // gradcheck
    auto *gradcheck = app.add_subcommand("gradcheck", "finite-difference check of every layer backward pass");
    double gc_step = infsa::kDefaultFdStep, gc_tol = 1e-5;
    gradcheck->add_option("--step", gc_step, "finite-difference step")->capture_default_str();
    gradcheck->add_option("--tol", gc_tol, "max relative error tolerance")->capture_default_str();

    // bench
    auto *bench = app.add_subcommand("bench", "latency scaling study with log-log slope fit");
    std::string ben_variant;
    std::vector<std::size_t> ben_sizes = {1024, 2048, 4096, 8192, 16384};
    std::size_t ben_repeats = 7, ben_dim = 16;
    unsigned ben_threads = 1;
    bench->add_option("--variant", ben_variant, "pure|linear|softmax-baseline")
        ->required()
        ->check(CLI::IsMember({"pure", "linear", "softmax-baseline"}));
    bench->add_option("--sizes", ben_sizes, "token counts, strictly increasing (>= 4)")
        ->delimiter(',')
        ->capture_default_str();
    bench->add_option("--repeats", ben_repeats, "timed repeats per size (>= 5)")->capture_default_str();
    bench->add_option("--dim", ben_dim, "feature dimension")->capture_default_str();
    bench->add_option("--threads", ben_threads, "kernel threads (INFSA_THREADS overrides)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        if (e.get_exit_code() == 0) {
            return app.exit(e); // --help / --version
        }
        app.exit(e);
        return 2;
    }

    try {
        if (*affinity) {
            return cmdAffinity(g, aff_input, aff_keys, aff_activation, aff_output);
        }
        if (*kernel) {
            return cmdKernel(g, ker_input, ker_output);
        }
        if (*centrality) {
            return cmdCentrality(g, cen_input, cen_per_depth);
        }
        if (*markov) {
            return cmdMarkov(g, mar_input, mar_simulate, mar_start, mar_walks,
                             effectiveThreads(mar_threads));
        }
        if (*simulate) {
            return cmdSimulate(g, sim_input, sim_start, sim_walks,
                               effectiveThreads(sim_threads));
        }
        if (*fig3) {
            return cmdFig3Demo(g);
        }
        if (*forward) {
            return cmdForward(g, fwd_variant, fwd_input, fwd_heads, fwd_dff,
                              fwd_activation, fwd_output);
        }
        if (*align) {
            return cmdAlign(g, ali_input, ali_samples, ali_tokens, ali_dim, ali_tpow);
        }
        if (*gradcheck) {
            return cmdGradcheck(g, gc_step, gc_tol);
        }
        if (*bench) {
            // Size/repeat preconditions are usage errors, not domain errors.
            if (ben_sizes.size() < 4) {
                std::cerr << "usage error: --sizes needs at least 4 points\n";
                return 2;
            }
            for (std::size_t i = 1; i < ben_sizes.size(); ++i) {
                if (ben_sizes[i] <= ben_sizes[i - 1]) {
                    std::cerr << "usage error: --sizes must be strictly increasing\n";
                    return 2;
                }
            }
            if (ben_repeats < 5) {
                std::cerr << "usage error: --repeats must be >= 5\n";
                return 2;
            }
            return cmdBench(g, ben_variant, ben_sizes, ben_repeats, ben_dim,
                            effectiveThreads(ben_threads));
        }
    } catch (const infsa::Error &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
