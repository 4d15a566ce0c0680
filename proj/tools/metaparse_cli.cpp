#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "metaparse/experiment.hpp"

namespace mp = metaparse;

namespace {

struct Common {
  std::string config;
  std::vector<std::string> overrides;
  std::string output_dir;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, Common& c, bool with_seed) {
  cmd->add_option("-c,--config", c.config, "experiment configuration (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("-s,--set", c.overrides, "override a config key, e.g. meta.inner_steps=3");
  cmd->add_option("-o,--output-dir", c.output_dir, "override output_dir");
  if (with_seed) cmd->add_option("--seed", c.seed, "run only this seed (default: every configured seed)");
}

mp::ExperimentConfig load(const Common& c) {
  auto overrides = c.overrides;
  if (!c.output_dir.empty()) overrides.push_back("output_dir=\"" + c.output_dir + "\"");
  return mp::load_experiment(c.config, overrides);
}

std::vector<std::uint64_t> seeds_of(const mp::ExperimentConfig& cfg, const Common& c) {
  if (!c.seed) return cfg.seeds;
  return {*c.seed};
}

int fail(const char* kind, int code, const std::string& message) {
  std::cerr << nlohmann::json{{"error", kind}, {"exit_code", code}, {"message", message}}.dump() << std::endl;
  return code;
}

void say(const std::string& s) { std::cerr << "[metaparse] " << s << std::endl; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Few-shot cross-lingual dependency parsing with first-order MAML"};
  app.require_subcommand(1);
  app.set_version_flag("--version", mp::kVersion);

  Common synth, pre, meta, ne, test, analyze, report, run;
  add_common(app.add_subcommand("synth", "generate the synthetic treebanks and typology table"), synth, false);
  add_common(app.add_subcommand("pretrain", "supervised pre-training on the high-resource language"), pre, true);
  add_common(app.add_subcommand("metatrain", "episodic meta-training (and the no-pre-training baseline)"), meta, true);
  add_common(app.add_subcommand("train-ne", "non-episodic joint-training baseline"), ne, true);
  add_common(app.add_subcommand("metatest", "few-shot fine-tuning and evaluation on the meta-test languages"), test, true);
  add_common(app.add_subcommand("analyze", "typology and projectivity correlations"), analyze, false);
  add_common(app.add_subcommand("report", "result tables over seeds"), report, false);
  add_common(app.add_subcommand("run", "every stage in order"), run, false);

  std::string gold, pred, checkpoint, pred_out;
  auto* eval = app.add_subcommand("eval", "score CoNLL-U predictions, or parse with a checkpoint and score");
  eval->add_option("--gold", gold, "gold CoNLL-U")->required()->check(CLI::ExistingFile);
  auto* pred_opt = eval->add_option("--pred", pred, "predicted CoNLL-U")->check(CLI::ExistingFile);
  auto* ckpt_opt = eval->add_option("--checkpoint", checkpoint, "parser checkpoint")->check(CLI::ExistingFile);
  eval->add_option("--pred-out", pred_out, "write the checkpoint's parses here")->needs(ckpt_opt);
  pred_opt->excludes(ckpt_opt);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", 2, e.what());
  }

  try {
    auto* cmd = app.get_subcommands().front();
    const std::string name = cmd->get_name();
    if (name == "synth") {
      auto cfg = load(synth);
      for (const auto& p : mp::run_synth(cfg)) say("wrote " + p);
    } else if (name == "pretrain") {
      auto cfg = load(pre);
      for (auto s : seeds_of(cfg, pre)) {
        say("pretrain seed " + std::to_string(s));
        mp::run_pretrain(cfg, s);
      }
    } else if (name == "metatrain") {
      auto cfg = load(meta);
      for (auto s : seeds_of(cfg, meta)) {
        say("metatrain seed " + std::to_string(s));
        mp::run_metatrain(cfg, s);
      }
    } else if (name == "train-ne") {
      auto cfg = load(ne);
      for (auto s : seeds_of(cfg, ne)) {
        say("train-ne seed " + std::to_string(s));
        mp::run_train_ne(cfg, s);
      }
    } else if (name == "metatest") {
      auto cfg = load(test);
      for (auto s : seeds_of(cfg, test)) {
        say("metatest seed " + std::to_string(s));
        mp::run_metatest(cfg, s);
      }
    } else if (name == "analyze") {
      mp::run_analyze(load(analyze));
    } else if (name == "report") {
      mp::run_report(load(report));
    } else if (name == "run") {
      mp::run_pipeline(load(run), say);
    } else if (name == "eval") {
      mp::Treebank g = mp::read_conllu(gold);
      mp::Treebank p;
      if (!checkpoint.empty()) {
        mp::ParserParams model = mp::load_checkpoint(checkpoint);
        p = mp::parse_treebank(g, model);
        if (!pred_out.empty()) mp::write_file(pred_out, mp::emit_conllu(p));
      } else if (!pred.empty()) {
        p = mp::read_conllu(pred);
      } else {
        return fail("usage", 2, "eval needs --pred or --checkpoint");
      }
      auto s = mp::las(g, p);
      std::cout << nlohmann::json{{"las", s.las}, {"uas", s.uas}, {"scored", s.scored}}.dump() << std::endl;
    }
  } catch (const mp::ConfigError& e) {
    return fail("config", 2, e.what());
  } catch (const mp::DataError& e) {
    return fail("data", 3, e.what());
  } catch (const mp::NumericalError& e) {
    return fail("numerical", 4, e.what());
  } catch (const std::exception& e) {
    return fail("internal", 1, e.what());
  }
  return 0;
}
