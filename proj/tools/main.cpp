#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"

using namespace cellvote::cli;

int main(int argc, char** argv) {
  CLI::App app{"cellvote: segmentation, crowd labelling and consensus analysis for blood-cell images"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions global;
  std::string config, out;
  app.add_option("--config", config, "JSON config with per-command sections");
  app.add_option("--seed", global.seed, "seed for every random draw")->capture_default_str();
  app.add_option("--out", out, "output directory");

  SegmentArgs seg;
  auto* segment = app.add_subcommand("segment", "Chan-Vese segmentation into per-cell crops");
  segment->add_option("inputs", seg.inputs, "images or directories")->required();
  segment->add_option("--mu", seg.mu, "contour length weight");
  segment->add_option("--max-iter", seg.max_iter, "iteration cap");
  segment->add_option("--tol", seg.tol, "relative energy change that counts as converged");
  segment->add_option("--min-area", seg.min_area, "drop components smaller than this (pixels)");
  segment->add_option("--pad", seg.pad, "crop padding (pixels)");

  BatchArgs bat;
  auto* batch = app.add_subcommand("batch", "pair crops into tasks and journal them");
  batch->add_option("manifest", bat.manifest, "crops.csv or truth manifest")->required();
  batch->add_option("--pairing", bat.pairing, "sequential | shuffle");
  batch->add_option("--k", bat.k, "votes per task");
  batch->add_option("--reward", bat.reward_usd, "reward per assignment, USD");
  batch->add_option("--journal", bat.journal, "journal directory");

  ServeArgs srv;
  auto* serve = app.add_subcommand("serve", "run the task service over HTTP");
  serve->add_option("--host", srv.host);
  serve->add_option("--port", srv.port, "0 picks a free port");
  serve->add_option("--journal", srv.journal, "journal directory");
  serve->add_option("--images", srv.images, "directory served under /images");

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "generate a synthetic vote corpus");
  simulate->add_option("--workers", sim.workers, "worker pool size");
  simulate->add_option("--items", sim.items, "items per class, e.g. 617,181,50");
  simulate->add_option("--truth", sim.truth, "truth manifest to label instead of --items");
  simulate->add_option("--rho", sim.rho, "difficulty correlation, one value or three");
  simulate->add_option("--calibrate", sim.calibrate, "target consensus accuracies; fits rho per class");
  simulate->add_option("--k", sim.k);
  simulate->add_option("--quorum", sim.quorum);
  simulate->add_option("--mc-items", sim.mc_items, "Monte-Carlo items per calibration step");

  AggregateArgs agg;
  auto* aggregate = app.add_subcommand("aggregate", "consensus labels and agreement histogram");
  aggregate->add_option("votes", agg.votes, "votes CSV")->required();
  aggregate->add_option("--k", agg.k)->capture_default_str();
  aggregate->add_option("--quorum", agg.quorum)->capture_default_str();

  ReportArgs rep;
  auto* report = app.add_subcommand("report", "metric tables for votes against ground truth");
  report->add_option("votes", rep.votes, "votes CSV")->required();
  report->add_option("truth", rep.truth, "truth manifest")->required();
  report->add_option("--format", rep.format)->check(CLI::IsMember({"text", "csv", "json"}))->capture_default_str();
  report->add_option("--na", rep.na, "how no-consensus items count")->check(CLI::IsMember({"exclude", "error"}))
      ->capture_default_str();
  report->add_option("--k", rep.k)->capture_default_str();
  report->add_option("--quorum", rep.quorum)->capture_default_str();

  EstimateArgs est;
  auto* estimate = app.add_subcommand("estimate", "consensus accuracy of independent annotators");
  estimate->add_option("alpha", est.alphas, "per-vote accuracies, decimal or a/b")->required();
  estimate->add_option("--k", est.k)->capture_default_str();
  estimate->add_option("--quorum", est.quorum)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }
  if (!config.empty()) global.config = config;
  if (!out.empty()) global.out = out;

  const Io io{std::cout, std::cerr};
  if (*segment) return cmd_segment(seg, global, io);
  if (*batch) return cmd_batch(bat, global, io);
  if (*serve) return cmd_serve(srv, global, io);
  if (*simulate) return cmd_simulate(sim, global, io);
  if (*aggregate) return cmd_aggregate(agg, global, io);
  if (*report) return cmd_report(rep, global, io);
  return cmd_estimate(est, global, io);
}
