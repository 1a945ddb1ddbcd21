// fbl -- command-line front end for the feedbacklab shared library.
// Links only the public C API.

#include <feedback_lab.h>

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace {

std::string read_file(const std::string& path, bool& ok) {
    std::ifstream in(path);
    if (!in) {
        ok = false;
        return {};
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    ok = true;
    return ss.str();
}

std::string json_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '"' || c == '\\') out.push_back('\\');
        out.push_back(c);
    }
    return out;
}

// Builds a flat JSON object from --seed/--workers/--convention plus --set
// key=value pairs (values are passed through as JSON literals).
std::string build_overrides(bool have_seed, unsigned long seed, bool have_workers, int workers,
                            const std::string& convention,
                            const std::vector<std::string>& sets) {
    std::ostringstream os;
    os << "{";
    bool first = true;
    auto sep = [&]() {
        if (!first) os << ",";
        first = false;
    };
    if (have_seed) {
        sep();
        os << "\"seed\":" << seed;
    }
    if (have_workers) {
        sep();
        os << "\"workers\":" << workers;
    }
    if (!convention.empty()) {
        sep();
        os << "\"n_convention\":\"" << json_escape(convention) << "\"";
    }
    for (const auto& kv : sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = kv.substr(0, eq);
        std::string value = kv.substr(eq + 1);
        sep();
        os << "\"" << json_escape(key) << "\":";
        // Bare words that are not JSON literals are treated as strings.
        const bool looks_json = !value.empty() &&
                                (value[0] == '{' || value[0] == '[' || value[0] == '"' ||
                                 value[0] == '-' || (value[0] >= '0' && value[0] <= '9') ||
                                 value == "true" || value == "false" || value == "null");
        if (looks_json)
            os << value;
        else
            os << "\"" << json_escape(value) << "\"";
    }
    os << "}";
    return os.str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"feedbacklab: numerical analysis of cyclic negative feedback systems"};
    app.set_version_flag("--version", std::string(fbl_version()));
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "out";
    unsigned long seed = 0;
    bool have_seed = false;
    int workers = 0;
    bool have_workers = false;
    std::string convention;
    std::vector<std::string> sets;
    bool quiet = false;

    const std::vector<std::string> commands = {"check-class", "simulate",       "limits",
                                               "equilibria",  "cycles",         "floquet",
                                               "connect",     "transversality", "perturb",
                                               "census",      "verify"};
    for (const auto& name : commands) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "config JSON file")->required();
        sub->add_option("--out", out_dir, "output directory (default: out)");
        sub->add_option("--seed", seed, "override the config seed")
            ->each([&](const std::string&) { have_seed = true; });
        sub->add_option("--workers", workers, "worker pool size")
            ->each([&](const std::string&) { have_workers = true; });
        sub->add_option("--convention", convention,
                        "n_convention override (edge_forward_negative | paper_verbatim)");
        sub->add_option("--set", sets,
                        "config override as dotted.key=json_value (repeatable)");
        sub->add_flag("--quiet", quiet, "suppress the report summary");
    }

    CLI11_PARSE(app, argc, argv);
    const std::string command = app.get_subcommands().front()->get_name();

    bool ok = false;
    const std::string config_json = read_file(config_path, ok);
    if (!ok) {
        std::fprintf(stderr, "fbl: cannot read config file '%s'\n", config_path.c_str());
        return 2;
    }
    const std::string overrides =
        build_overrides(have_seed, seed, have_workers, workers, convention, sets);

    char* report = nullptr;
    int exit_code = 0;
    const fbl_status st = fbl_run_command(command.c_str(), config_json.c_str(),
                                          overrides.c_str(), out_dir.c_str(), &report,
                                          &exit_code);
    if (report) {
        if (!quiet) {
            if (command == "verify") {
                // Per-criterion lines are also written to verify.lines.txt.
                std::printf("%s\n", report);
            } else {
                std::printf("%s\n", report);
            }
        }
        fbl_string_free(report);
    }
    if (st != FBL_OK && exit_code == 0) exit_code = 1;
    if (st != FBL_OK)
        std::fprintf(stderr, "fbl: %s (%s)\n", fbl_last_error(),
                     command.c_str());
    std::fprintf(stderr, "fbl: report written to %s/%s.report.json (exit %d)\n",
                 out_dir.c_str(), command.c_str(), exit_code);
    return exit_code;
}
