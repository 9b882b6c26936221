// Command-line front end over the C API.
#include <CLI11.hpp>

#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "patchflow/patchflow.h"

namespace {

void write(void*, int stream, const char* text) {
  std::FILE* f = stream == 1 ? stdout : stderr;
  std::fputs(text, f);
  std::fputc('\n', f);
  std::fflush(f);
}

struct RunFlags {
  std::string config, positional, output;
  int threads = 0;
  std::optional<std::uint64_t> seed;
  bool resume = false;

  void attach(CLI::App* app, bool with_resume) {
    app->add_option("scenario", positional, "Config path or bundled scenario name");
    app->add_option("--config,-c", config, "Config path or bundled scenario name");
    app->add_option("--output,-o", output, "Output directory (overrides PATCHFLOW_OUTPUT and the config)");
    app->add_option("--threads,-j", threads, "Worker threads")->check(CLI::PositiveNumber);
    app->add_option("--seed", seed, "Seed for pair sampling (overrides the config)");
    if (with_resume) app->add_flag("--resume", resume, "Continue from the latest snapshot in the output directory");
  }

  pf_command_options options() const {
    pf_command_options o{};
    o.config = config.empty() ? positional.c_str() : config.c_str();
    o.output = output.empty() ? nullptr : output.c_str();
    o.threads = threads;
    o.has_seed = seed.has_value();
    o.seed = seed.value_or(0);
    o.resume = resume;
    o.write = write;
    return o;
  }
};

// Accepts "a=1 b=2" or plain numbers.
std::optional<std::vector<double>> parse_params(const std::vector<std::string>& raw) {
  std::vector<double> out;
  for (const auto& s : raw) {
    const auto eq = s.find('=');
    try {
      out.push_back(std::stod(eq == std::string::npos ? s : s.substr(eq + 1)));
    } catch (const std::exception&) {
      return std::nullopt;
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lagrangian particle solver for transport by homogeneous singular kernels"};
  app.require_subcommand(1);
  app.set_version_flag("--version", pf_version());

  RunFlags sim, ver;
  auto* simulate = app.add_subcommand("simulate", "Run a configured scenario");
  sim.attach(simulate, true);
  auto* verify = app.add_subcommand("verify", "Run the property checks for a config's kernel");
  ver.attach(verify, false);

  std::string kname;
  int kdim = 2;
  std::vector<std::string> kparams;
  std::string kout;
  auto* kinfo = app.add_subcommand("kernel-info", "Sphere constants of a builtin kernel");
  kinfo->add_option("name", kname, "biot_savart, aggregation or mixed2d")->required();
  kinfo->add_option("n", kdim, "Dimension")->required();
  kinfo->add_option("params", kparams, "Kernel parameters, e.g. a=1 b=1");
  kinfo->add_option("--output,-o", kout, "Output directory");

  std::string csv, rout;
  auto* report = app.add_subcommand("report", "Convert a diagnostics CSV to long format");
  report->add_option("csv", csv, "diagnostics.csv")->required();
  report->add_option("--output,-o", rout, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 64;
  }

  if (simulate->parsed() || verify->parsed()) {
    const RunFlags& f = simulate->parsed() ? sim : ver;
    if (f.config.empty() && f.positional.empty()) {
      std::fputs("error: a config path or scenario name is required\n", stderr);
      return 64;
    }
    const pf_command_options o = f.options();
    return simulate->parsed() ? pf_cmd_simulate(&o) : pf_cmd_verify(&o);
  }
  if (kinfo->parsed()) {
    const auto params = parse_params(kparams);
    if (!params) {
      std::fputs("error: kernel parameters must be numbers\n", stderr);
      return 64;
    }
    return pf_cmd_kernel_info(kname.c_str(), kdim, params->data(), params->size(), kout.empty() ? nullptr : kout.c_str(),
                              write, nullptr);
  }
  return pf_cmd_report(csv.c_str(), rout.empty() ? nullptr : rout.c_str(), write, nullptr);
}
