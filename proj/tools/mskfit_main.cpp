#include <CLI11.hpp>
#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "mskfit/experiment.hpp"

namespace {

// Applies command-line overrides on top of the spec file.
mskfit::experiment::ExperimentSpec load_spec(const std::string& path,
                                             const std::vector<std::uint64_t>& seeds,
                                             const std::vector<int>& scales) {
    auto spec = mskfit::experiment::ExperimentSpec::load(path);
    if (!seeds.empty()) spec.train.seeds = seeds;
    if (!scales.empty()) spec.train.scales = scales;
    spec.train.validate();
    return spec;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"sEMG-driven elbow motion surrogate: synthetic data generation, "
                 "multi-scale training with muscle parameter identification, and evaluation"};
    app.require_subcommand(1);

    std::string spec_path, out_dir = ".", checkpoint_path, trial_path;
    std::vector<std::uint64_t> seeds;
    std::vector<int> scales;
    int threads = 2;

    auto* gen = app.add_subcommand("generate", "Write trial CSVs and the truth record");
    gen->add_option("--spec", spec_path, "experiment spec (JSON)")->required();
    gen->add_option("--out", out_dir, "output directory");

    auto* train = app.add_subcommand("train", "Run multi-scale training over all seeds");
    train->add_option("--spec", spec_path, "experiment spec (JSON)")->required();
    train->add_option("--out", out_dir, "output directory");
    train->add_option("--seeds", seeds, "override seed list")->delimiter(',');
    train->add_option("--scales", scales, "override scale list, e.g. -2,-1,0")->delimiter(',');
    train->add_option("--threads", threads, "parallel seed jobs");

    auto* eval = app.add_subcommand("evaluate", "Rollout a checkpoint over one trial CSV");
    eval->add_option("--checkpoint", checkpoint_path, "checkpoint JSON")->required();
    eval->add_option("--trial", trial_path, "trial CSV")->required();
    eval->add_option("--out", out_dir, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return 2;
    }

    try {
        if (gen->parsed()) {
            return mskfit::experiment::cmd_generate(load_spec(spec_path, {}, {}), out_dir);
        }
        if (train->parsed()) {
            return mskfit::experiment::cmd_train(load_spec(spec_path, seeds, scales), out_dir,
                                                 threads);
        }
        return mskfit::experiment::cmd_evaluate(checkpoint_path, trial_path, out_dir);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
