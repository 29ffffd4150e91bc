#include "tierbench/cli.hpp"

#include <ostream>

#include "commands.hpp"
#include "tierbench/error.hpp"
#include "tierbench/io.hpp"

namespace tierbench::cli {

std::shared_ptr<Common> Registry::add(CLI::App* sub, std::string name, Action action) {
  auto common = std::make_shared<Common>();
  sub->add_option("--out,-o", common->out, "Run directory for outputs and manifest.json")->capture_default_str();
  sub->add_option("--seed", common->seed, "Seed for every random draw")->capture_default_str();
  sub->add_option("--format", common->format, "Tabular output format")
      ->check(CLI::IsMember({"json", "csv"}))
      ->capture_default_str();
  commands_.push_back({sub, std::move(name), common, std::move(action)});
  return common;
}

namespace {

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kIoError:
    case ErrorCode::kTransportError:
    case ErrorCode::kAuthError:
    case ErrorCode::kPartialCollection:
      return 2;
    default:
      return 1;
  }
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Evaluation and aggregation toolkit for four-tier quality judgments", "tierbench"};
  app.set_config("--config", "", "INI or TOML config file; command-line flags take precedence");
  app.set_version_flag("--version", TIERBENCH_VERSION);
  app.require_subcommand(1);
  Registry reg;
  register_data_commands(app, reg);
  register_analysis_commands(app, reg);
  register_misc_commands(app, reg);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return 0;
    }
    err << "usage error: " << e.what() << "\n";
    return 1;
  }

  const Command* cmd = nullptr;
  for (const auto& c : reg.commands()) {
    if (c.app->parsed()) cmd = &c;
  }
  if (cmd == nullptr) {
    err << "usage error: choose a subcommand (see --help)\n";
    return 1;
  }

  RunContext ctx(cmd->name, cmd->common->out, cmd->common->seed, cmd->common->format);
  std::vector<std::string> args(argv + std::min(argc, 1), argv + argc);
  nlohmann::json errors = nlohmann::json::array();
  int code = 0;
  try {
    cmd->action(ctx);
  } catch (const Error& e) {
    code = exit_code_for(e.code());
    errors.push_back({{"code", error_code_name(e.code())}, {"message", e.what()}});
  } catch (const std::filesystem::filesystem_error& e) {
    code = 2;
    errors.push_back({{"code", "IoError"}, {"message", e.what()}});
  } catch (const std::exception& e) {
    code = 1;
    errors.push_back({{"code", "SchemaError"}, {"message", e.what()}});
  }
  for (const auto& e : errors) err << e["message"].get<std::string>() << "\n";

  const auto manifest_path = ctx.out_dir() / "manifest.json";
  try {
    io::write_file_atomic(manifest_path, ctx.manifest(args, code, errors).dump(2) + "\n");
  } catch (const std::exception& e) {
    err << "cannot write manifest: " << e.what() << "\n";
    return 2;
  }
  out << (code == 0 ? "ok: " : "failed: ") << manifest_path.string() << "\n";
  return code;
}

}  // namespace tierbench::cli
