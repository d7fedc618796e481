#include <iostream>

#include <CLI11.hpp>

#include "cli/commands.hpp"

using namespace sncert::cli;

namespace {

void add_source(CLI::App* app, PlantSource& src) {
  auto* plant = app->add_option("--plant", src.plant_path, "plant JSON file");
  auto* env = app->add_option("--env", src.env, "built-in environment (pendulum, gtm)");
  plant->excludes(env);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Train and certify spectrally normalized neural controllers"};
  app.require_subcommand(1);

  TrainOptions train;
  std::uint64_t seed = 0;
  auto* t = app.add_subcommand("train", "train a policy with PPO");
  t->add_option("--config", train.config_path, "run config JSON");
  t->add_option("--env", train.env, "override the config's environment");
  auto* seed_opt = t->add_option("--seed", seed, "single seed, overrides the config's seeds");
  t->add_option("--out", train.out, "output directory");

  GainOptions gain;
  auto* g = app.add_subcommand("gain", "L2 gain of a plant");
  add_source(g, gain.source);
  g->add_option("--out", gain.out, "output directory");

  CertifyPreOptions pre;
  auto* cp = app.add_subcommand("certify-pre", "small-gain certificate");
  add_source(cp, pre.source);
  cp->add_option("--policy", pre.policy_path, "policy JSON")->required();
  cp->add_option("--out", pre.out, "output directory");

  CertifyPostOptions post;
  auto* cq = app.add_subcommand("certify-post", "local LMI certificate with sector bounds");
  add_source(cq, post.source);
  cq->add_option("--policy", post.policy_path, "policy JSON")->required();
  cq->add_option("--mu-min", post.mu_min, "lower end of the bound search")->check(CLI::PositiveNumber);
  cq->add_option("--mu-max", post.mu_max, "upper end of the bound search")->check(CLI::PositiveNumber);
  cq->add_option("--rel-tol", post.rel_tol, "relative bisection tolerance")->check(CLI::PositiveNumber);
  cq->add_option("--out", post.out, "output directory");

  SimulateOptions sim;
  auto* s = app.add_subcommand("simulate", "closed-loop rollout");
  add_source(s, sim.source);
  s->add_option("--policy", sim.policy_path, "policy JSON")->required();
  s->add_option("--x0", sim.x0, "initial state, e.g. \"pi,0\"");
  s->add_option("--steps", sim.steps, "horizon (capped by the env episode length)");
  s->add_option("--out", sim.out, "output directory");

  RoaGridOptions roa;
  auto* r = app.add_subcommand("roa-grid", "empirical region of attraction on a grid");
  add_source(r, roa.source);
  r->add_option("--policy", roa.policy_path, "policy JSON")->required();
  r->add_option("--grid", roa.grid, "axes as name:lo:hi:count, comma separated");
  r->add_option("--certificate", roa.certificate_path, "certificate JSON to audit");
  r->add_option("--horizon", roa.horizon, "simulation horizon");
  r->add_option("--tol", roa.tol, "convergence tolerance on the final state norm");
  r->add_option("--out", roa.out, "output directory");

  ReportOptions rep;
  auto* p = app.add_subcommand("report", "render report.svg for a run directory");
  p->add_option("--out", rep.run_dir, "run directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfigError;
  }

  return run_guarded(
      [&]() -> int {
        if (t->parsed()) {
          if (seed_opt->count() > 0) train.seed = seed;
          return cmd_train(train, std::cout);
        }
        if (g->parsed()) return cmd_gain(gain, std::cout);
        if (cp->parsed()) return cmd_certify_pre(pre, std::cout);
        if (cq->parsed()) return cmd_certify_post(post, std::cout);
        if (s->parsed()) return cmd_simulate(sim, std::cout);
        if (r->parsed()) return cmd_roa_grid(roa, std::cout);
        return cmd_report(rep, std::cout);
      },
      std::cerr);
}
