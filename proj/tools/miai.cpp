// Experiment driver: train target models, run the attack suite, write
// reports. Every run is fully determined by a config file and a seed.

#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "miai/experiment.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_override;
    int64_t seed_override = -1;
    int jobs_override = 0;
    bool label_only = false;
};

miai::ExperimentConfig load_with_overrides(const CommonArgs& args) {
    miai::ExperimentConfig cfg = miai::load_experiment_config(args.config_path);
    if (args.seed_override >= 0) cfg.seed = static_cast<uint64_t>(args.seed_override);
    if (!args.out_override.empty()) cfg.out_dir = args.out_override;
    if (args.jobs_override > 0) cfg.jobs = args.jobs_override;
    return cfg;
}

void add_common(CLI::App* cmd, CommonArgs& args, bool with_label_only = true) {
    cmd->add_option("--config", args.config_path, "experiment config file")->required();
    cmd->add_option("--seed", args.seed_override, "override the config seed");
    cmd->add_option("--out", args.out_override, "override the output directory");
    cmd->add_option("--jobs", args.jobs_override, "worker threads for per-record attack work");
    if (with_label_only)
        cmd->add_flag("--label-only", args.label_only,
                      "expose only predicted labels to the attacks");
}

void inspect_model(const std::string& path) {
    miai::SavedTarget target = miai::load_target(path);
    const miai::Model& model = *target.model;
    std::cout << "kind: " << model.kind() << "\n";
    std::cout << "exposes_confidence: " << (target.exposes_confidence ? "true" : "false") << "\n";
    std::cout << "classes:";
    for (const auto& c : model.classes()) std::cout << " " << c;
    std::cout << "\n";
    auto importances = model.attribute_importances();
    if (!importances.empty()) {
        double sum = 0.0;
        std::cout << "attribute importances:\n";
        for (size_t a = 0; a < importances.size(); ++a) {
            std::cout << "  " << model.schema().at(a).name << " = "
                      << miai::format_number(importances[a]) << "\n";
            sum += importances[a];
        }
        std::cout << "importance sum: " << miai::format_number(sum) << "\n";
    }
    if (model.kind() == "mlp") {
        const auto& mlp = dynamic_cast<const miai::MlpModel&>(model);
        std::cout << "layer dims:";
        for (int d : mlp.net().dims()) std::cout << " " << d;
        std::cout << "\n";
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"model-inversion attribute-inference experiment driver"};
    app.require_subcommand(1);

    CommonArgs run_args, train_args, attack_args, report_args;
    std::string model_path;

    CLI::App* run = app.add_subcommand("run", "train target, run attacks, write reports");
    add_common(run, run_args);
    CLI::App* train = app.add_subcommand("train-target", "train (or import) the target model");
    add_common(train, train_args, false);
    CLI::App* attack = app.add_subcommand("attack", "run the configured attacks on a saved target");
    add_common(attack, attack_args);
    CLI::App* report = app.add_subcommand("report", "compute metrics and write the reports");
    add_common(report, report_args, false);
    CLI::App* inspect = app.add_subcommand("inspect-model", "describe a saved model");
    inspect->add_option("--model", model_path, "saved model file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            miai::run_experiment(load_with_overrides(run_args), run_args.label_only);
        } else if (train->parsed()) {
            miai::stage_train(load_with_overrides(train_args));
        } else if (attack->parsed()) {
            miai::stage_attack(load_with_overrides(attack_args), attack_args.label_only);
        } else if (report->parsed()) {
            miai::stage_report(load_with_overrides(report_args));
        } else if (inspect->parsed()) {
            inspect_model(model_path);
        }
    } catch (const miai::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
