// kmst - workload generation, simulation runs, k-sweeps, oracle replay.

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "kmst/bench.hpp"
#include "kmst/oracle.hpp"

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write " + path);
  out << text;
}

kmst::bench::Workload load_workload(const std::string& graph_path, const std::string& stream_path) {
  auto gf = kmst::graphstore::parse_graph_file(slurp(graph_path));
  kmst::bench::Workload w;
  w.n = gf.n;
  w.initial = gf.edges;
  w.batches = kmst::bench::parse_stream(slurp(stream_path));
  // focus vertex rides in a stream comment; re-parse it if present
  std::istringstream in(slurp(stream_path));
  std::string line;
  while (std::getline(in, line)) {
    auto pos = line.find("focus=");
    if (line.find('#') != std::string::npos && pos != std::string::npos) {
      w.focus_vertex = std::stoll(line.substr(pos + 6));
      break;
    }
  }
  return w;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"k-machine dynamic MSF simulator"};
  app.require_subcommand(1);

  // ---- gen ----
  auto* gen = app.add_subcommand("gen", "generate a workload (graph file + update stream)");
  std::string gen_type = "random";
  std::int64_t gn = 64, gm0 = 128, gbatches = 20, gbatch_size = 4, gseed = 1, gcap = 64;
  int gk = 4;
  double gdelta = 1.0;
  std::string gen_graph = "graph.txt", gen_out = "stream.txt";
  gen->add_option("--type", gen_type, "random | lower-bound")->check(CLI::IsMember({"random", "lower-bound"}));
  gen->add_option("--n", gn, "vertex count (random)");
  gen->add_option("--m0", gm0, "initial edge count (random)");
  gen->add_option("--batches", gbatches, "batch count (random)");
  gen->add_option("--batch-size", gbatch_size, "updates per batch (random)");
  gen->add_option("--k", gk, "machine count")->check(CLI::Range(2, 1 << 20));
  gen->add_option("--delta", gdelta, "exponent parameter (lower-bound)");
  gen->add_option("--cap", gcap, "vertex-set cap (lower-bound)");
  gen->add_option("--seed", gseed, "generator seed");
  gen->add_option("--graph", gen_graph, "output graph file");
  gen->add_option("--out", gen_out, "output stream file");

  // ---- run ----
  auto* run = app.add_subcommand("run", "run a workload on the simulator");
  std::string run_graph, run_stream, run_out = "report.csv", run_solver = "boruvka";
  int rk = 4;
  std::int64_t rseed = 1;
  bool no_oracle = false;
  run->add_option("--graph", run_graph, "graph file")->required();
  run->add_option("--workload", run_stream, "update stream file")->required();
  run->add_option("--k", rk, "machine count")->check(CLI::Range(2, 1 << 20));
  run->add_option("--seed", rseed, "partition seed");
  run->add_option("--solver", run_solver, "contracted solver")->check(CLI::IsMember({"boruvka"}));
  run->add_option("--out", run_out, "CSV output file");
  run->add_flag("--no-oracle", no_oracle, "skip the per-batch oracle check");

  // ---- bench ----
  auto* bench = app.add_subcommand("bench", "sweep a random workload over several k");
  std::int64_t bn = 128, bm0 = 512, bbatches = 10, bseed = 1;
  std::vector<int> bks{4, 8, 16};
  std::string bench_out = "bench", bench_solver = "boruvka";
  bench->add_option("--n", bn, "vertex count");
  bench->add_option("--m0", bm0, "initial edge count");
  bench->add_option("--batches", bbatches, "batch count");
  bench->add_option("--seed", bseed, "seed");
  bench->add_option("--k", bks, "machine counts to sweep");
  bench->add_option("--solver", bench_solver, "contracted solver");
  bench->add_option("--out", bench_out, "output file prefix");

  // ---- validate ----
  auto* val = app.add_subcommand("validate", "oracle replay of a workload, no simulator");
  std::string val_graph, val_stream;
  val->add_option("--graph", val_graph, "graph file")->required();
  val->add_option("--workload", val_stream, "update stream file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;  // 2 = input error; --help stays 0
  }

  try {
    if (gen->parsed()) {
      kmst::bench::Workload w;
      if (gen_type == "random")
        w = kmst::bench::gen_random_stream(gn, gk, gm0, gbatches, gbatch_size, gseed);
      else
        w = kmst::bench::gen_lower_bound_schedule(gk, gdelta, gcap, gseed);
      if (auto bad = kmst::bench::referee(w)) {
        std::cerr << "generator produced an invalid batch " << *bad << "\n";
        return 2;
      }
      kmst::graphstore::GraphFile gf{w.n, w.initial};
      spit(gen_graph, kmst::graphstore::format_graph_file(gf));
      spit(gen_out, kmst::bench::format_stream(w));
      std::cout << "wrote " << gen_graph << " (" << w.initial.size() << " edges) and " << gen_out
                << " (" << w.batches.size() << " batches)\n";
    } else if (run->parsed()) {
      auto w = load_workload(run_graph, run_stream);
      if (auto bad = kmst::bench::referee(w)) {
        std::cerr << "invalid workload at batch " << *bad << "\n";
        return 2;
      }
      kmst::bench::RunOptions opt;
      opt.k = rk;
      opt.seed = rseed;
      opt.check_oracle = !no_oracle;
      opt.solver = run_solver;
      auto rep = kmst::bench::run(w, opt);
      spit(run_out, rep.csv);
      std::cout << "init rounds: " << rep.init_rounds << ", total rounds: " << rep.total_rounds
                << ", report: " << run_out << "\n";
      if (rep.exit_code != 0) {
        std::cerr << "forest diverged from the oracle\n";
        return 1;
      }
    } else if (bench->parsed()) {
      for (int k : bks) {
        auto w = kmst::bench::gen_random_stream(bn, k, bm0, bbatches, k, bseed);
        kmst::bench::RunOptions opt;
        opt.k = k;
        opt.seed = bseed;
        opt.solver = bench_solver;
        auto rep = kmst::bench::run(w, opt);
        std::string path = bench_out + "_k" + std::to_string(k) + ".csv";
        spit(path, rep.csv);
        std::cout << "k=" << k << " init=" << rep.init_rounds << " total=" << rep.total_rounds
                  << " -> " << path << "\n";
        if (rep.exit_code != 0) {
          std::cerr << "forest diverged from the oracle at k=" << k << "\n";
          return 1;
        }
      }
    } else if (val->parsed()) {
      auto w = load_workload(val_graph, val_stream);
      if (auto bad = kmst::bench::referee(w)) {
        std::cerr << "invalid workload at batch " << *bad << "\n";
        return 2;
      }
      std::cout << "workload replays cleanly (" << w.batches.size() << " batches)\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
