#pragma once

#include <cstdint>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bfile.hpp"
#include "constructs.hpp"
#include "errors.hpp"
#include "factdig.hpp"
#include "morpheng.hpp"
#include "numth.hpp"
#include "serialize.hpp"

namespace factseq::cli {

using numth::u32;
using numth::u64;

// Exit codes: 0 pass, 1 verification mismatch, 2 usage error, 3 resource/overflow.
inline constexpr int exit_ok = 0;
inline constexpr int exit_mismatch = 1;
inline constexpr int exit_usage = 2;
inline constexpr int exit_resource = 3;

struct RunConfig {
    std::string subcommand;
    u64 b = 10;
    u32 k = 1;
    std::optional<u64> n;
    std::optional<u64> N;
    std::string engine = "auto"; // oracle | stream | fast | auto
    u64 c = 1, d = 0;
    std::optional<u64> a;
    std::string format = "text"; // text | json | bfile
    std::string out;             // output path; empty = stdout
    std::string bfile_path;
    bool minimized = false;
    std::size_t cap = constructs::default_alphabet_cap;
    unsigned threads = 1;
};

namespace detail {

struct OutputTarget {
    std::ofstream file;
    std::ostream* os = &std::cout;

    explicit OutputTarget(const std::string& path) {
        if (!path.empty()) {
            file.open(path);
            if (!file) throw std::runtime_error("cannot open output file " + path);
            os = &file;
        }
    }
    std::ostream& stream() { return *os; }
};

// Unified point-query interface over the three engines.
class EngineBox {
  public:
    EngineBox(const RunConfig& cfg, u64 max_n) : cfg_(cfg) {
        mode_ = cfg.engine;
        if (mode_ == "auto") {
            try {
                fast_ = std::make_unique<factdig::FastEngine>(
                    factdig::FastEngine::build(cfg.b, cfg.k));
                mode_ = "fast";
            } catch (const resource_error&) {
                mode_ = "stream";
            }
        } else if (mode_ == "fast") {
            fast_ = std::make_unique<factdig::FastEngine>(factdig::FastEngine::build(cfg.b, cfg.k));
        } else if (mode_ == "oracle") {
            if (max_n > factdig::oracle_n_limit)
                throw resource_error("oracle engine: n must be <= " +
                                     std::to_string(factdig::oracle_n_limit));
        } else if (mode_ == "stream") {
            if (max_n > factdig::stream_n_limit)
                throw resource_error("stream engine: n must be <= " +
                                     std::to_string(factdig::stream_n_limit));
        } else {
            throw std::domain_error("unknown engine '" + mode_ + "'");
        }
    }

    u64 single(u64 n) const {
        if (mode_ == "fast") return fast_->ell(n);
        if (mode_ == "oracle") return factdig::ell_oracle({cfg_.b, cfg_.k, n});
        return factdig::ell_stream({cfg_.b, cfg_.k, n}, cfg_.threads);
    }

    // Sequential values for n = 0..N-1 via the cheapest incremental path.
    template <typename Fn>
    void scan(u64 N, Fn&& fn) const {
        if (mode_ == "fast") {
            for (u64 n = 0; n < N; ++n) fn(n, fast_->ell(n));
        } else if (mode_ == "oracle") {
            numth::bigint fact = 1;
            for (u64 n = 0; n < N; ++n) {
                if (n > 0) fact *= n;
                fn(n, numth::last_nonzero_value(cfg_.b, cfg_.k, fact));
            }
        } else {
            factdig::StreamCursor cur(cfg_.b, cfg_.k);
            for (u64 n = 0; n < N; ++n) {
                fn(n, cur.value());
                cur.advance();
            }
        }
    }

    const std::string& mode() const { return mode_; }

  private:
    RunConfig cfg_;
    std::string mode_;
    std::unique_ptr<factdig::FastEngine> fast_;
};

inline void print_row(std::ostream& os, const std::string& format, u64 n, u64 value) {
    if (format == "json")
        os << nlohmann::json{{"n", n}, {"value", value}}.dump() << "\n";
    else
        os << n << " " << value << "\n";
}

} // namespace detail

inline int cmd_compute(const RunConfig& cfg) {
    detail::OutputTarget out(cfg.out);
    const bool progression = cfg.c != 1 || cfg.d != 0;
    if (cfg.a) {
        if (!cfg.N) throw std::domain_error("--a requires --N (density over n < N)");
        auto r = constructs::empirical_density(cfg.b, cfg.k, *cfg.a, cfg.c, cfg.d, *cfg.N,
                                               cfg.threads);
        if (cfg.format == "json")
            out.stream() << nlohmann::json{{"b", cfg.b},       {"k", cfg.k}, {"a", *cfg.a},
                                           {"c", cfg.c},       {"d", cfg.d}, {"N", *cfg.N},
                                           {"density", r.to_string()},
                                           {"approx", r.to_double()}}
                                .dump()
                         << "\n";
        else
            out.stream() << r.to_string() << " (" << r.to_double() << ")\n";
        return exit_ok;
    }
    if (cfg.N) {
        if (progression) {
            // Strided indices need random access, so this path requires the fast engine.
            auto engine = factdig::FastEngine::build(cfg.b, cfg.k);
            for (u64 n = 0; n < *cfg.N; ++n) {
                if ((numth::u128)cfg.c * n + cfg.d > ~u64(0))
                    throw std::overflow_error("c*n+d overflows");
                detail::print_row(out.stream(), cfg.format, n, engine.ell(cfg.c * n + cfg.d));
            }
            return exit_ok;
        }
        detail::EngineBox box(cfg, *cfg.N);
        box.scan(*cfg.N, [&](u64 n, u64 v) { detail::print_row(out.stream(), cfg.format, n, v); });
        return exit_ok;
    }
    u64 n = cfg.n.value_or(0);
    detail::EngineBox box(cfg, n);
    u64 v = box.single(n);
    if (cfg.format == "json")
        out.stream() << nlohmann::json{{"b", cfg.b}, {"k", cfg.k}, {"n", n}, {"value", v}}.dump()
                     << "\n";
    else if (cfg.format == "bfile")
        out.stream() << n << " " << v << "\n";
    else
        out.stream() << v << "\n";
    return exit_ok;
}

inline int cmd_analyze(const RunConfig& cfg) {
    detail::OutputTarget out(cfg.out);
    std::ostream& os = out.stream();
    auto P = constructs::derive_params(cfg.b, cfg.k);
    auto cls = constructs::classify(cfg.b, cfg.k);
    u64 phi_count = P.q1k / P.p1 * (P.p1 - 1);
    numth::u128 lambda = (numth::u128)phi_count * P.u * P.v;
    u64 sigma = constructs::sigma_tilde_size(cfg.b, cfg.k);

    std::optional<u64> minimized_letters;
    if (lambda <= cfg.cap) {
        if (P.l1 == 1) {
            auto phi = constructs::build_phi_tilde(P, cfg.cap);
            if (phi.m.d <= 10000)
                minimized_letters = morpheng::minimize(phi.m, phi.coding).morphism.d;
        } else {
            auto psi = constructs::build_psi(P.p1, P.K, P.u, P.v, cfg.cap);
            if (psi.m.d <= 10000) {
                auto tau = constructs::build_tau(P, psi);
                minimized_letters = morpheng::minimize(psi.m, tau).morphism.d;
            }
        }
    }

    auto table = constructs::frequency_table(cfg.b, cfg.k);
    auto spectral = constructs::spectral_frequencies(cfg.b, cfg.k, cfg.cap);
    bool agree = table.nonzero.size() == spectral.size();
    if (agree)
        for (auto& [a, f] : spectral)
            if (!(table.f(a) == f)) {
                agree = false;
                break;
            }

    if (cfg.format == "json") {
        nlohmann::json j;
        j["b"] = cfg.b;
        j["k"] = cfg.k;
        j["b_pow_k"] = P.bk;
        nlohmann::json fac = nlohmann::json::array();
        for (auto& pp : P.bf.factors) fac.push_back({{"p", pp.p}, {"l", pp.l}});
        j["factorization"] = std::move(fac);
        j["class"] = constructs::to_string(cls);
        j["params"] = {{"p1", P.p1}, {"l1", P.l1}, {"K", P.K}, {"q1", P.q1}, {"q", P.q},
                       {"t", P.t},   {"s", P.s},   {"u", P.u}, {"v", P.v}};
        j["triple_alphabet"] = (u64)lambda;
        j["pair_alphabet"] = sigma;
        if (minimized_letters) j["minimized_alphabet"] = *minimized_letters;
        nlohmann::json freq = nlohmann::json::object();
        for (auto& [a, f] : spectral)
            freq[std::to_string(a)] = {{"formula", table.f(a).to_string()},
                                       {"spectral", f.to_string()}};
        j["frequencies"] = std::move(freq);
        j["frequencies_agree"] = agree;
        os << j.dump(2) << "\n";
    } else {
        os << "base " << cfg.b << ", k = " << cfg.k << "  (b^k = " << P.bk << ")\n";
        os << "factorization:";
        for (auto& pp : P.bf.factors) os << " " << pp.p << "^" << pp.l;
        os << "\n";
        os << "class: " << constructs::to_string(cls) << " (p1 = " << P.p1 << ")\n";
        os << "params: l1=" << P.l1 << " K=" << P.K << " q1=" << P.q1 << " q=" << P.q
           << " t=" << P.t << " s=" << P.s << " u=" << P.u << " v=" << P.v << "\n";
        os << "triple alphabet: " << (u64)lambda << " letters\n";
        os << "pair alphabet: " << sigma << " letters\n";
        if (minimized_letters) os << "minimized alphabet: " << *minimized_letters << " letters\n";
        os << "frequencies (value: formula | spectral):\n";
        for (auto& [a, f] : spectral)
            os << "  " << a << ": " << table.f(a).to_string() << " | " << f.to_string() << "\n";
        os << "sum of formula frequencies: " << table.total.to_string() << "\n";
        os << (agree ? "formula and spectral frequencies agree\n"
                     : "ERROR: formula and spectral frequencies disagree\n");
    }
    return agree ? exit_ok : exit_mismatch;
}

inline int cmd_verify(const RunConfig& cfg) {
    detail::OutputTarget out(cfg.out);
    std::ostream& os = out.stream();
    u64 N = cfg.N.value_or(100000);
    bool pass = true;
    nlohmann::json j;
    j["b"] = cfg.b;
    j["k"] = cfg.k;
    j["N"] = N;
    const bool text = cfg.format != "json";
    if (text) os << "verify b=" << cfg.b << " k=" << cfg.k << " N=" << N << "\n";

    auto P = constructs::derive_params(cfg.b, cfg.k);
    auto rep = constructs::verify_agreement(cfg.b, cfg.k, N);
    if (!rep.on_S_mismatches.empty()) pass = false;
    if (text) {
        os << "S-agreement: " << rep.on_S_mismatches.size() << " mismatches on S (checked "
           << rep.checked << "; off-S mismatches:";
        std::size_t shown = 0;
        for (u64 n : rep.off_S_mismatches) {
            if (shown++ == 10) {
                os << " ...";
                break;
            }
            os << " " << n;
        }
        os << ")\n";
    } else {
        j["on_S_mismatches"] = rep.on_S_mismatches;
        j["off_S_mismatch_count"] = rep.off_S_mismatches.size();
    }

    // Fixed-point cross-check of the triple morphism, when the alphabet fits.
    u64 alpha_N = std::min<u64>(N, 10000);
    try {
        auto ac = constructs::alpha_check(P.p1, P.K, P.u, P.v, alpha_N, cfg.cap);
        if (!ac.ok) pass = false;
        if (text)
            os << "fixed point vs arithmetic (N=" << alpha_N << "): "
               << (ac.ok ? "ok" : "MISMATCH at " + std::to_string(ac.first_mismatch)) << "\n";
        else
            j["alpha_check"] = ac.ok;
    } catch (const resource_error&) {
        if (text)
            os << "fixed point vs arithmetic: skipped (alphabet exceeds cap)\n";
        else
            j["alpha_check"] = nullptr;
    }

    u64 tri_N = std::min<u64>(N, 2000);
    bool tri_ok = true;
    {
        auto engine = factdig::FastEngine::build(cfg.b, cfg.k);
        factdig::StreamCursor cur(cfg.b, cfg.k);
        numth::bigint fact = 1;
        for (u64 n = 0; n <= tri_N; ++n) {
            if (n > 0) fact *= n;
            u64 a = numth::last_nonzero_value(cfg.b, cfg.k, fact);
            u64 s = cur.value();
            u64 f = engine.ell(n);
            if (a != s || s != f) {
                tri_ok = false;
                break;
            }
            cur.advance();
        }
    }
    if (!tri_ok) pass = false;
    if (text)
        os << "oracle/stream/fast agreement (n <= " << tri_N << "): " << (tri_ok ? "ok" : "MISMATCH")
           << "\n";
    else
        j["triple_agreement"] = tri_ok;

    if (!cfg.bfile_path.empty()) {
        auto records = bfile::read_file(cfg.bfile_path);
        u64 compare_n = cfg.N ? N : records.size();
        std::vector<std::pair<u64, std::pair<u64, u64>>> diffs; // n -> (got, want)
        auto engine = factdig::FastEngine::build(cfg.b, cfg.k);
        u64 compared = 0;
        for (const auto& r : records) {
            if (compared == compare_n) break;
            ++compared;
            u64 got = engine.ell(r.n);
            if (got != r.value && diffs.size() < 10) diffs.emplace_back(r.n, std::make_pair(got, r.value));
        }
        if (!diffs.empty()) pass = false;
        if (text) {
            os << "bfile " << cfg.bfile_path << ": " << compared << " rows compared, "
               << (diffs.empty() ? "0 mismatches" : "mismatches:") << "\n";
            for (auto& [n, gw] : diffs)
                os << "  n=" << n << " computed=" << gw.first << " file=" << gw.second << "\n";
        } else {
            j["bfile_rows"] = compared;
            j["bfile_mismatches"] = diffs.size();
        }
    }

    if (text)
        os << (pass ? "PASS" : "FAIL") << "\n";
    else {
        j["pass"] = pass;
        os << j.dump(2) << "\n";
    }
    return pass ? exit_ok : exit_mismatch;
}

inline int cmd_export(const RunConfig& cfg) {
    detail::OutputTarget out(cfg.out);
    auto P = constructs::derive_params(cfg.b, cfg.k);
    serialize::MorphismDoc doc;
    if (P.l1 == 1) {
        auto phi = constructs::build_phi_tilde(P, cfg.cap);
        doc = {phi.m, phi.coding, phi.start};
    } else {
        auto psi = constructs::build_psi(P.p1, P.K, P.u, P.v, cfg.cap);
        doc = {psi.m, constructs::build_tau(P, psi), psi.start};
    }
    if (cfg.minimized) {
        auto min = morpheng::minimize(doc.morphism, doc.coding);
        doc = {min.morphism, min.coding, min.block_of[doc.start]};
    }
    if (cfg.format == "dot")
        out.stream() << serialize::to_dot(doc);
    else
        out.stream() << serialize::to_json(doc).dump(2) << "\n";
    return exit_ok;
}

inline int run(int argc, const char* const* argv) {
    RunConfig cfg;
    CLI::App app{"last nonzero digits of n! in base b: engines, morphisms, frequencies"};
    app.set_config("--config")->envname("FACTSEQ_CONFIG");
    app.require_subcommand(1);

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--b", cfg.b, "base (>= 2)")->check(CLI::Range((u64)2, ~u64(0)));
        sub->add_option("--k", cfg.k, "number of digits (>= 1)")->check(CLI::Range(1u, 64u));
        sub->add_option("--cap", cfg.cap, "alphabet cap in letters");
        sub->add_option("--threads", cfg.threads, "worker threads");
        sub->add_option("--out", cfg.out, "output file (default stdout)");
    };

    CLI::App* compute = app.add_subcommand("compute", "compute digit strings of n!");
    add_common(compute);
    compute->add_option("--n", cfg.n, "single index n");
    compute->add_option("--N", cfg.N, "stream values for all n < N");
    compute->add_option("--engine", cfg.engine, "oracle | stream | fast | auto")
        ->check(CLI::IsMember({"oracle", "stream", "fast", "auto"}));
    compute->add_option("--c", cfg.c, "progression stride: use index c*n+d")
        ->check(CLI::Range((u64)1, ~u64(0)));
    compute->add_option("--d", cfg.d, "progression offset: use index c*n+d");
    compute->add_option("--a", cfg.a,
                        "with --N: print the share of n < N with digit string equal to a");
    compute->add_option("--format", cfg.format, "text | json | bfile")
        ->check(CLI::IsMember({"text", "json", "bfile"}));

    CLI::App* analyze = app.add_subcommand("analyze", "classification, parameters, frequencies");
    add_common(analyze);
    analyze->add_option("--format", cfg.format, "text | json")
        ->check(CLI::IsMember({"text", "json"}));

    CLI::App* verify = app.add_subcommand("verify", "run agreement and fixed-point checks");
    add_common(verify);
    verify->add_option("--N", cfg.N, "check bound (default 1e5)");
    verify->add_option("--bfile", cfg.bfile_path, "reference b-file to compare against")
        ->check(CLI::ExistingFile);
    verify->add_option("--format", cfg.format, "text | json")
        ->check(CLI::IsMember({"text", "json"}));

    CLI::App* exp = app.add_subcommand("export", "write the generating morphism");
    add_common(exp);
    exp->add_flag("--minimized", cfg.minimized, "minimize before exporting");
    exp->add_option("--format", cfg.format, "json | dot")
        ->check(CLI::IsMember({"json", "dot"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? exit_ok : exit_usage;
    }

    try {
        if (compute->parsed()) return cmd_compute(cfg);
        if (analyze->parsed()) return cmd_analyze(cfg);
        if (verify->parsed()) return cmd_verify(cfg);
        return cmd_export(cfg);
    } catch (const resource_error& e) {
        std::cerr << "resource error: " << e.what() << "\n";
        return exit_resource;
    } catch (const std::bad_alloc&) {
        std::cerr << "resource error: out of memory\n";
        return exit_resource;
    } catch (const std::overflow_error& e) {
        std::cerr << "overflow: " << e.what() << "\n";
        return exit_resource;
    } catch (const consistency_error& e) {
        std::cerr << "consistency failure: " << e.what() << "\n";
        return exit_mismatch;
    } catch (const numeric_error& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return exit_mismatch;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_usage;
    }
}

} // namespace factseq::cli
