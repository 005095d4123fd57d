// Runs every acceptance criterion once from a cold cache, then the warm
// repeat, and prints one line per criterion.

#include <filesystem>
#include <iostream>
#include <random>

#include "critlab/app/commands.hpp"

namespace fs = std::filesystem;
using namespace critlab::app;

int main() {
  const fs::path dir = fs::temp_directory_path() / ("critlab-acceptance-" + std::to_string(std::random_device{}()));
  RunConfig cfg;
  cfg.cache_dir = (dir / "cache").string();
  cfg.out_dir = (dir / "out").string();
  Context ctx(cfg);
  int code = 1;
  try {
    const auto r = cmd_verify(ctx);
    write_outputs(r, cfg);
    std::cout << r.summary;
    const auto& t = r.report.at("run").at("cache_timing");
    std::cout << "cold " << t.at("cold_seconds").get<double>() << " s, warm " << t.at("warm_seconds").get<double>()
              << " s, speedup " << t.at("speedup").get<double>() << "\n";
    code = r.exit_code;
  } catch (const std::exception& e) {
    std::cerr << "acceptance run failed: " << e.what() << "\n";
  }
  std::error_code ec;
  fs::remove_all(dir, ec);
  return code;
}
