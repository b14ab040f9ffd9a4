// urnlab: analysis and simulation of balanced multi-color urns grown under
// multiple drawing. Subcommands: validate, expand, classify, moments,
// asymptotics, simulate, verify.

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include "urnlab/io.hpp"

namespace {

// exit codes: 0 ok, 1 validation failed, 2 io, 3 model, 4 numeric, 5 verify failed
constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitIo = 2;
constexpr int kExitModel = 3;
constexpr int kExitNumeric = 4;
constexpr int kExitVerify = 5;

void emit(const std::string& text, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << text;
        if (!text.empty() && text.back() != '\n') std::cout << "\n";
    } else {
        std::ofstream out(out_path);
        if (!out) throw std::runtime_error("cannot write output file: " + out_path);
        out << text;
    }
}

urnlab::UrnSpec load_validated(const std::string& spec_path, const std::string& mode_override) {
    urnlab::UrnSpec spec = urnlab::load_spec(spec_path);
    if (mode_override == "without_replacement")
        spec.mode = urnlab::SamplingMode::WithoutReplacement;
    else if (mode_override == "with_replacement")
        spec.mode = urnlab::SamplingMode::WithReplacement;
    else if (!mode_override.empty())
        throw urnlab::model_error("unknown mode override: " + mode_override);
    urnlab::ValidationReport rep = urnlab::validate(spec);
    if (!rep.ok) {
        std::string msg = "spec fails validation:";
        for (const auto& [rule, m] : rep.violations) msg += "\n  [" + rule + "] " + m;
        throw urnlab::model_error(msg);
    }
    return spec;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"balanced multi-color urn schemes under multiple drawing"};
    app.require_subcommand(1);

    std::string spec_path, out_path, csv_path, mode_override;
    long long n = 1000, reps = 1000;
    std::uint64_t seed = 1;
    double tol = -1.0;
    bool record_y = false;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--spec", spec_path, "urn spec JSON file")->required();
        cmd->add_option("--out", out_path, "output file (default: stdout)");
    };

    CLI::App* c_validate = app.add_subcommand("validate", "check a spec, emit a report");
    add_common(c_validate);

    CLI::App* c_expand = app.add_subcommand("expand", "expand the core to the replacement matrix");
    add_common(c_expand);

    CLI::App* c_classify = app.add_subcommand("classify", "spectral decomposition and core index");
    add_common(c_classify);
    c_classify->add_option("--tol", tol, "eigenvalue clustering tolerance");

    CLI::App* c_moments = app.add_subcommand("moments", "exact mean/covariance trajectory (CSV)");
    add_common(c_moments);
    c_moments->add_option("--n", n, "horizon")->required();

    CLI::App* c_asym = app.add_subcommand("asymptotics", "B, Sigma limit and CLT scaling");
    add_common(c_asym);

    CLI::App* c_sim = app.add_subcommand("simulate", "Monte Carlo estimation");
    add_common(c_sim);
    c_sim->add_option("--n", n, "horizon")->required();
    c_sim->add_option("--reps", reps, "replications")->required();
    c_sim->add_option("--seed", seed, "master seed");
    c_sim->add_option("--mode", mode_override, "sampling mode override");
    c_sim->add_flag("--record-y", record_y, "accepted for compatibility (per-path diagnostic)");
    c_sim->add_option("--csv", csv_path, "per-replication terminal states CSV");

    CLI::App* c_verify = app.add_subcommand("verify", "Monte Carlo vs exact moments and limit law");
    add_common(c_verify);
    c_verify->add_option("--n", n, "horizon")->required();
    c_verify->add_option("--reps", reps, "replications")->required();
    c_verify->add_option("--seed", seed, "master seed");
    c_verify->add_option("--mode", mode_override, "sampling mode override");

    CLI11_PARSE(app, argc, argv);

    try {
        if (c_validate->parsed()) {
            urnlab::UrnSpec spec = urnlab::load_spec(spec_path);
            urnlab::ValidationReport rep = urnlab::validate(spec);
            emit(urnlab::to_json(rep).dump(2), out_path);
            return rep.ok ? kExitOk : kExitValidation;
        }
        if (c_expand->parsed()) {
            urnlab::UrnSpec spec = load_validated(spec_path, "");
            emit(urnlab::replacement_matrix_csv(
                     urnlab::build_replacement_matrix(spec.core, spec.s)),
                 out_path);
            return kExitOk;
        }
        if (c_classify->parsed()) {
            urnlab::UrnSpec spec = load_validated(spec_path, "");
            emit(urnlab::to_json(urnlab::decompose(spec.core, tol)).dump(2), out_path);
            return kExitOk;
        }
        if (c_moments->parsed()) {
            urnlab::UrnSpec spec = load_validated(spec_path, "");
            emit(urnlab::moments_csv(urnlab::compute_moments(spec, static_cast<int>(n))),
                 out_path);
            return kExitOk;
        }
        if (c_asym->parsed()) {
            urnlab::UrnSpec spec = load_validated(spec_path, "");
            emit(urnlab::to_json(urnlab::clt_params(spec)).dump(2), out_path);
            return kExitOk;
        }
        if (c_sim->parsed()) {
            urnlab::UrnSpec spec = load_validated(spec_path, mode_override);
            urnlab::MonteCarloSummary sum = urnlab::monte_carlo(spec, n, reps, seed);
            if (!csv_path.empty()) emit(urnlab::terminal_states_csv(sum), csv_path);
            emit(urnlab::to_json(sum).dump(2), out_path);
            return kExitOk;
        }
        if (c_verify->parsed()) {
            urnlab::UrnSpec spec = load_validated(spec_path, mode_override);
            urnlab::MonteCarloSummary sum = urnlab::monte_carlo(spec, n, reps, seed);
            urnlab::AsymptoticSummary theory = urnlab::clt_params(spec);
            urnlab::MomentTrajectory exact = urnlab::compute_moments(spec, static_cast<int>(n));
            urnlab::ComparisonReport rep = urnlab::compare(sum, theory, exact);
            emit(urnlab::to_json(rep).dump(2), out_path);
            return rep.all_ok ? kExitOk : kExitVerify;
        }
    } catch (const urnlab::tenability_violation& e) {
        std::cerr << "tenability violation: " << e.what() << "\n";
        return kExitModel;
    } catch (const urnlab::model_error& e) {
        std::cerr << "model error: " << e.what() << "\n";
        return kExitModel;
    } catch (const urnlab::numeric_error& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "cannot parse spec: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    }
    return kExitOk;
}
