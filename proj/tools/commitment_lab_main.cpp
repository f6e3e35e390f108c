// Command-line front end: runs one scenario described by a JSON config and
// writes the report as JSON or CSV, to stdout or to a file.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "clab/errors.hpp"
#include "clab/scenario.hpp"

namespace fs = std::filesystem;

namespace {

constexpr const char* kOutDirEnvVar = "COMMITMENT_LAB_OUT_DIR";

void emit_error(const std::string& type, const std::string& message) {
  nlohmann::json err = {{"error", {{"type", type}, {"message", message}}}};
  std::cerr << err.dump() << "\n";
}

std::string classify(const clab::Error& e) {
  if (dynamic_cast<const clab::ConfigError*>(&e)) return "config_error";
  if (dynamic_cast<const clab::InvalidProfileError*>(&e)) return "invalid_profile";
  if (dynamic_cast<const clab::UndefinedConditionalError*>(&e)) return "undefined_conditional";
  if (dynamic_cast<const clab::InvalidScenarioError*>(&e)) return "invalid_scenario";
  return "error";
}

fs::path resolve_out_path(const std::string& out) {
  fs::path path(out);
  if (path.is_relative()) {
    if (const char* dir = std::getenv(kOutDirEnvVar)) {
      if (*dir) path = fs::path(dir) / path;
    }
  }
  return path;
}

// Full content is staged next to the target and renamed into place, so a
// failed run never leaves a truncated output file behind.
void write_atomically(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path());
  }
  fs::path staging = path;
  staging += ".tmp";
  {
    std::ofstream out(staging, std::ios::binary | std::ios::trunc);
    if (!out) throw clab::Error("cannot open '" + staging.string() + "' for writing");
    out << content;
    if (!out.flush()) throw clab::Error("failed writing '" + staging.string() + "'");
  }
  fs::rename(staging, path);
}

struct CliOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string format = "json";
};

int run_kind(const std::string& kind_name, const CliOptions& options) {
  std::ifstream in(options.config_path);
  if (!in) {
    emit_error("io_error", "cannot read config file '" + options.config_path + "'");
    return 1;
  }
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    emit_error("config_error", "config is not valid JSON: " + std::string(e.what()));
    return 1;
  }

  try {
    if (!doc.is_object() || !doc.contains("kind") || !doc["kind"].is_string()) {
      throw clab::ConfigError("config: missing string field 'kind'");
    }
    if (doc["kind"].get<std::string>() != kind_name) {
      throw clab::ConfigError("config kind '" + doc["kind"].get<std::string>() +
                              "' does not match subcommand '" + kind_name + "'");
    }
    if (options.seed) doc["seed"] = *options.seed;

    const clab::ScenarioConfig config = clab::parse_scenario(doc);
    const clab::RunReport report = clab::run_scenario(config);

    const std::string content =
        options.format == "csv" ? report.csv : report.document.dump(2) + "\n";
    if (options.out.empty()) {
      std::cout << content;
    } else {
      write_atomically(resolve_out_path(options.out), content);
    }
    return 0;
  } catch (const clab::Error& e) {
    emit_error(classify(e), e.what());
    return 1;
  } catch (const std::exception& e) {
    emit_error("internal_error", e.what());
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Credible commitment device laboratory"};
  app.set_version_flag("--version", "commitment-lab 1.0.0");

  bool list_games = false;
  bool list_devices = false;
  app.add_flag("--list-games", list_games, "List built-in game names and exit");
  app.add_flag("--list-devices", list_devices, "List built-in device names and exit");

  CliOptions options;
  const std::vector<std::string> kinds = {"verify", "learn",   "bribe", "penalty",
                                          "duel",   "auction", "audit"};
  for (const std::string& kind : kinds) {
    CLI::App* sub = app.add_subcommand(kind, "Run a " + kind + " scenario");
    sub->add_option("--config", options.config_path, "Scenario config file (JSON)")
        ->required();
    sub->add_option("--seed", options.seed, "Override the config's seed");
    sub->add_option("--out", options.out,
                    "Output path (relative paths resolve against $" +
                        std::string(kOutDirEnvVar) + " when set); stdout when omitted");
    sub->add_option("--format", options.format, "Output format")
        ->check(CLI::IsMember({"json", "csv"}));
  }
  app.require_subcommand(0, 1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help, --version
    std::ostringstream quiet;
    app.exit(e, quiet, quiet);
    emit_error("usage_error", e.what());
    return 1;
  }

  if (list_games) {
    for (const std::string& name : clab::builtin_game_names()) std::cout << name << "\n";
    return 0;
  }
  if (list_devices) {
    for (const std::string& name : clab::builtin_device_names()) std::cout << name << "\n";
    return 0;
  }

  for (const auto* sub : app.get_subcommands()) {
    return run_kind(sub->get_name(), options);
  }

  emit_error("usage_error", "expected a scenario subcommand or a --list flag");
  return 1;
}
