#include "pgfcs/sweep.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace {

struct CommonOpts {
  std::string model = "builtin:aklt";
  int n_a = 1;
  int n_c = 1;
  std::string b_range = "2..10";
  std::string engine = "transfer";
  std::vector<std::string> variants;
  bool disconnected = false;
  bool strict = false;
  std::string out;
  std::string format = "csv";
  std::uint64_t seed = 0;
  int threads = 0;
};

void parse_b_range(const std::string& text, int& start, int& end, int& stride) {
  stride = 1;
  std::string range = text;
  const auto colon = range.find(':');
  if (colon != std::string::npos) {
    stride = std::stoi(range.substr(colon + 1));
    range = range.substr(0, colon);
  }
  const auto dots = range.find("..");
  if (dots == std::string::npos) {
    start = end = std::stoi(range);
  } else {
    start = std::stoi(range.substr(0, dots));
    end = std::stoi(range.substr(dots + 2));
  }
  if (start < 1 || end < start || stride < 1)
    throw CLI::ValidationError("--b", "invalid range '" + text + "'");
}

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--model", o.model, "model source: file path or builtin:NAME");
  cmd->add_option("--na", o.n_a, "spins in region A")->check(CLI::PositiveNumber);
  cmd->add_option("--nc", o.n_c, "spins in region C")->check(CLI::PositiveNumber);
  cmd->add_option("--b", o.b_range, "buffer sizes, start..end[:stride] or a single value");
  cmd->add_option("--engine", o.engine, "entropy engine")->check(CLI::IsMember({"dense", "transfer"}));
  cmd->add_option("--variant", o.variants, "tilde variants (repeatable)")
      ->check(CLI::IsMember({"canonical", "gram", "aligned"}));
  cmd->add_flag("--disconnected", o.disconnected, "two-buffer geometry (recover only)");
  cmd->add_flag("--strict", o.strict, "exit nonzero on any bound violation");
  cmd->add_option("--out", o.out, "output path (default stdout)");
  cmd->add_option("--format", o.format, "output format")->check(CLI::IsMember({"csv", "json"}));
  cmd->add_option("--seed", o.seed, "seed recorded in the output header");
  cmd->add_option("--threads", o.threads, "worker threads (0 = hardware)");
}

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + out_path + "'");
  out << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pgfcs: finitely correlated spin-chain states, quantum Markov approximations, "
               "and conditional mutual information decay"};
  app.require_subcommand(1);

  CommonOpts o;
  CLI::App* spectrum = app.add_subcommand("spectrum", "transfer spectrum, gap, and components");
  CLI::App* sweep = app.add_subcommand("sweep", "sweep |B| and emit one row per size");
  CLI::App* recover = app.add_subcommand("recover", "recovery errors for one tripartition");
  CLI::App* decompose = app.add_subcommand("decompose", "ergodic decomposition report");
  CLI::App* export_mps = app.add_subcommand("export-mps", "write the site tensors as JSON");
  for (CLI::App* cmd : {spectrum, sweep, recover, decompose, export_mps}) add_common(cmd, o);
  bool merge = false;
  decompose->add_flag("--merge-equivalent", merge, "merge equivalent components instead of warning");

  CLI11_PARSE(app, argc, argv);

  try {
    const pgfcs::PgfcsModel model = pgfcs::resolve_model(o.model);
    if (spectrum->parsed()) {
      emit(pgfcs::spectrum_report(model), o.out);
      return 0;
    }
    if (decompose->parsed()) {
      emit(pgfcs::decompose_report(model, merge), o.out);
      return 0;
    }
    if (export_mps->parsed()) {
      emit(pgfcs::export_mps_json(model) + "\n", o.out);
      return 0;
    }
    int b0 = 2, b1 = 10, bs = 1;
    parse_b_range(o.b_range, b0, b1, bs);
    if (recover->parsed()) {
      std::string text;
      if (o.disconnected) {
        pgfcs::DisconnectedParts parts{o.n_a, b0, o.n_c, b1, o.n_a};
        text = pgfcs::recover_report_disconnected(model, parts, {});
      } else {
        for (int b = b0; b <= b1; b += bs)
          text += pgfcs::recover_report(model, {o.n_a, b, o.n_c}, {});
      }
      emit(text, o.out);
      return 0;
    }
    // sweep
    pgfcs::SweepConfig cfg;
    cfg.model_source = o.model;
    cfg.n_a = o.n_a;
    cfg.n_c = o.n_c;
    cfg.b_start = b0;
    cfg.b_end = b1;
    cfg.b_stride = bs;
    cfg.engine = o.engine == "dense" ? pgfcs::Engine::dense : pgfcs::Engine::transfer;
    if (!o.variants.empty()) {
      cfg.variants.clear();
      for (const auto& v : o.variants) {
        if (v == "canonical") cfg.variants.push_back(pgfcs::TildeVariant::canonical);
        if (v == "gram") cfg.variants.push_back(pgfcs::TildeVariant::gram);
        if (v == "aligned") cfg.variants.push_back(pgfcs::TildeVariant::aligned);
      }
    }
    cfg.out_path = o.out;
    cfg.format = o.format;
    cfg.seed = o.seed;
    cfg.strict = o.strict;
    cfg.threads = o.threads;
    pgfcs::SweepResult r = pgfcs::run_sweep(cfg);
    emit(cfg.format == "json" ? pgfcs::sweep_json(r) + "\n" : pgfcs::sweep_csv(r), o.out);
    if (cfg.strict && !r.violations.empty()) {
      std::cerr << r.violations.size() << " bound violation(s)\n";
      return 2;
    }
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
