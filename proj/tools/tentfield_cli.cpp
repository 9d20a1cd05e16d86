#include <chrono>
#include <cstdlib>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "tentfield/errors.hpp"
#include "tentfield/harness.hpp"
#include "tentfield/parallel.hpp"

using namespace tentfield;

int main(int argc, char** argv) {
  CLI::App app{"tent-space experiments for trilinear forms with curved singularities"};
  app.require_subcommand(1, 1);
  app.fallthrough();
  std::string config_path, out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  app.add_option("--config", config_path, "JSON experiment config");
  app.add_option("--seed", seed, "random seed (overrides the config)");
  app.add_option("--out", out_dir, "output directory; TENTFIELD_OUT takes precedence");
  app.add_option("--threads", threads, "worker threads, 0 = hardware concurrency");
  for (const auto& name : command_names()) app.add_subcommand(name);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  std::string command = app.get_subcommands().front()->get_name();

  try {
    ExperimentConfig c;
    if (!config_path.empty()) c = parse_config(config_path);
    if (seed) c.seed = *seed;
    if (threads) c.threads = *threads;
    if (!out_dir.empty()) c.out = out_dir;
    if (const char* env = std::getenv("TENTFIELD_OUT"); env && *env) c.out = env;
    validate(c);
    set_thread_count(c.threads);

    auto t0 = std::chrono::steady_clock::now();
    Report r = run_command(command, c);
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    auto files = r.write(c.out);
    for (const auto& e : r.checks) {
      std::cout << to_string(e.status) << "  " << e.name;
      if (!e.value.is_null()) std::cout << "  " << e.value.dump();
      std::cout << "\n";
    }
    for (const auto& f : files) std::cout << "wrote " << f << "\n";
    std::cout << command << ": " << (r.passed() ? "pass" : "FAIL") << " in " << secs << " s\n";
    return r.exit_code();
  } catch (const ConfigError& e) {
    std::cerr << "config error [" << to_string(e.issue) << (e.field.empty() ? "" : " " + e.field)
              << "]: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
