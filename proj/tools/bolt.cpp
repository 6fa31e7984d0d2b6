#include <cstdlib>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "bolt/error.hpp"
#include "bolt/io.hpp"
#include "bolt/pipeline.hpp"

namespace fs = std::filesystem;

namespace {

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("bolt");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("BOLT_LOG")) {
    const auto lvl = spdlog::level::from_str(env);
    // from_str maps unknown names to "off"; only accept it when asked for
    if (lvl != spdlog::level::off || std::string(env) == "off") {
      spdlog::set_level(lvl);
    } else {
      spdlog::warn("ignoring unknown BOLT_LOG level '{}'", env);
    }
  }
}

int cmd_run(const fs::path& manifest_path, const fs::path& out, const std::optional<fs::path>& config_path,
            const std::optional<int>& frames, const std::optional<int>& threads, bool debug_sdf, bool emit_frames,
            const std::optional<std::uint64_t>& seed) {
  const bolt::OutfitManifest manifest = bolt::read_manifest(manifest_path);
  bolt::PipelineConfig cfg;
  bolt::merge_config(cfg, manifest.config);
  if (config_path) bolt::merge_config(cfg, bolt::read_json(*config_path));
  if (frames) cfg.frames = *frames;
  if (threads) cfg.threads = *threads;
  if (debug_sdf) cfg.emit_debug_sdf = true;
  if (emit_frames) cfg.emit_frames = true;
  if (seed) cfg.seed = *seed;
  spdlog::info("running {} garment(s) into {}", manifest.garments.size(), out.string());
  const bolt::RunReport report = bolt::run_pipeline(manifest, cfg, out);
  for (const auto& w : report.warnings) spdlog::warn("{}", w);
  if (!report.ok) {
    std::cerr << "bolt: stage '" << report.failed_stage << "' failed";
    if (!report.failed_garment.empty()) std::cerr << " for '" << report.failed_garment << "'";
    std::cerr << ": " << report.error_message << "\n";
    return 1;
  }
  std::cout << "wrote " << out.string() << " (" << report.garments.size() << " garments, "
            << report.warnings.size() << " warnings)\n";
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"bolt: refit layered outfits from a source body to a target body"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "run the full pipeline over an outfit manifest");
  fs::path manifest, out;
  std::optional<fs::path> config;
  std::optional<int> frames, threads;
  std::optional<std::uint64_t> seed;
  bool debug_sdf = false, emit_frames = false;
  run->add_option("manifest", manifest, "outfit manifest (manifest.json)")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out, "output run directory")->required();
  run->add_option("--config", config, "JSON config overrides")->check(CLI::ExistingFile);
  run->add_option("--frames", frames, "simulated frames per layer")->check(CLI::NonNegativeNumber);
  run->add_option("--threads", threads, "worker threads (1 = sequential, 0 = all cores)");
  run->add_flag("--emit-debug-sdf", debug_sdf, "write the collision SDF used for each layer");
  run->add_flag("--emit-frames", emit_frames, "write every simulated frame as OBJ");
  run->add_option("--seed", seed, "recorded in the report; the pipeline itself is deterministic");

  auto* validate = app.add_subcommand("validate", "check a garment bundle, body directory or manifest");
  fs::path target;
  validate->add_option("bundle", target, "path to validate")->required();

  auto* report = app.add_subcommand("report", "print a run report as a table");
  fs::path run_dir;
  report->add_option("run-dir", run_dir, "run output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(manifest, out, config, frames, threads, debug_sdf, emit_frames, seed);
    if (*validate) {
      std::cout << bolt::validate_path(target) << "\nok\n";
      return 0;
    }
    if (*report) {
      const fs::path p = fs::is_directory(run_dir) ? run_dir / "report.json" : run_dir;
      std::cout << bolt::format_report_table(bolt::read_json(p));
      return 0;
    }
  } catch (const bolt::Error& e) {
    std::cerr << "bolt: " << bolt::to_string(e.kind()) << " error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "bolt: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
