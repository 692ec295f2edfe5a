#include "commands.hpp"

#include "scenario_file.hpp"

#include "loratdma/engine.hpp"
#include "loratdma/phy.hpp"
#include "loratdma/planner.hpp"
#include "loratdma/trace_export.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include <algorithm>
#include <ostream>

namespace loratdma::cli {

namespace {

struct ToaOptions {
    int payload = 0;
    int sf = 9;
    int bw = 125000;
    int cr = 5;
    int preamble = 8;
    bool implicit_header = false;
    bool no_crc = false;
    bool ldro = false;
    bool lorawan = false;
};

struct PlanOptions {
    std::string scenario;
    std::optional<int> nodes;
    std::optional<double> app_period;
    std::optional<int> k;
    double duty_limit = 1.0;
    std::optional<int> channels;
    std::optional<double> drift_ppm;
    std::optional<int> payload;
    std::optional<int> max_slots;
    std::optional<int> slot_ticks;
    std::optional<double> tick_rate;
    bool csv = false;
};

struct SimulateOptions {
    std::string scenario;
    std::string out_dir = "out";
    std::optional<std::uint64_t> seed;
    std::optional<std::int64_t> frames;
    std::vector<std::string> overrides;
};

int run_toa(const ToaOptions& o, std::ostream& out, std::ostream& err)
{
    phy::RadioParams radio{.spreading_factor = o.sf,
                           .bandwidth_hz = o.bw,
                           .coding_rate_denominator = o.cr,
                           .preamble_symbols = o.preamble,
                           .explicit_header = !o.implicit_header,
                           .crc_on = !o.no_crc,
                           .low_data_rate_opt = o.ldro};
    try {
        phy::validate(radio);
        const phy::Airtime toa =
            o.lorawan ? phy::lorawan_time_on_air(o.payload, radio) : phy::time_on_air(o.payload, radio);
        fmt::print(out, "{:.3f} ms\n", toa.milliseconds());
    } catch (const std::logic_error& e) {
        fmt::print(err, "error: {}\n", e.what());
        return kExitUsage;
    }
    return kExitOk;
}

double max_relative_drift(const Scenario& sc)
{
    if (sc.nodes.empty()) {
        return 0.0;
    }
    const auto [lo, hi] = std::minmax_element(sc.nodes.begin(), sc.nodes.end(),
                                              [](const NodeSpec& a, const NodeSpec& b) {
                                                  return a.drift_ppm < b.drift_ppm;
                                              });
    return hi->drift_ppm - lo->drift_ppm;
}

void print_plan(const planner::NetworkPlan& plan, bool csv, std::ostream& out)
{
    if (csv) {
        fmt::print(out, "node,relay,m,duty_pct\n");
        for (std::size_t i = 0; i < plan.loads.size(); ++i) {
            const auto& load = plan.loads[i];
            fmt::print(out, "{},{},{},{:.6f}\n", i, load.relay ? 1 : 0, load.m, load.duty * 100.0);
        }
        return;
    }
    fmt::print(out, "devices          {}\n", plan.n);
    fmt::print(out, "channels         {}\n", plan.c);
    fmt::print(out, "slot             {:.6f} s\n", plan.t_sl);
    fmt::print(out, "frame            {} slots, {:.6f} s\n", plan.n_slots, plan.t_f);
    fmt::print(out, "frames/period k  {}\n", plan.k);
    fmt::print(out, "app period       {:.6f} s\n", plan.t_app);
    fmt::print(out, "min app period   {:.6f} s\n", plan.min_t_app);
    fmt::print(out, "airtime          beacon {:.3f} ms, ack {:.3f} ms, data {:.3f} ms, lorawan {:.3f} ms\n",
               plan.t_bcn * 1e3, plan.t_ack * 1e3, plan.t_data * 1e3, plan.t_lorawan * 1e3);
    fmt::print(out, "mean power       {:.4f} mW\n", plan.p_tot * 1e3);
    fmt::print(out, "relay duty       {:.4f} %\n", plan.relay_duty() * 100.0);
    fmt::print(out, "max duty         {:.4f} % (limit {:.4f} %)\n", plan.max_duty() * 100.0,
               plan.duty_limit * 100.0);
    if (plan.feasible) {
        fmt::print(out, "feasible         yes\n");
    } else {
        fmt::print(out, "feasible         no: {}\n", plan.binding_constraint);
    }
}

int run_plan(const PlanOptions& o, std::ostream& out, std::ostream& err)
{
    planner::PlanRequest req;
    req.duty_limit = o.duty_limit / 100.0;
    if (!o.scenario.empty()) {
        Scenario sc;
        try {
            sc = load_scenario(o.scenario);
        } catch (const SchemaError& e) {
            fmt::print(err, "error: {}\n", e.what());
            return kExitUsage;
        }
        req.n = static_cast<int>(sc.nodes.size());
        req.channels = sc.channels;
        req.app_payload_bytes = sc.mac.app_payload_bytes;
        req.radio = sc.mac.radio;
        req.power = sc.power;
        req.max_n_slots = sc.mac.schedule.slots_per_frame;
        req.slot_seconds = sc.mac.slot_duration();
        req.drift_ppm = max_relative_drift(sc);
        if (!o.app_period) {
            req.k = sc.traffic.k;
            req.t_app_target = planner::app_period(sc.traffic.k, sc.mac.schedule.slots_per_frame, req.slot_seconds);
        }
        const auto sizes = planner::subtree_sizes(build_topology(sc), sc.relay);
        for (const auto& node : sc.nodes) {
            if (node.id != sc.relay) {
                req.node_subtrees.push_back(sizes.at(node.id));
            }
        }
    } else if (!o.nodes) {
        fmt::print(err, "error: plan needs --nodes or --scenario\n");
        return kExitUsage;
    }
    if (o.nodes) {
        req.n = *o.nodes;
        req.node_subtrees.clear();
    }
    if (o.channels) {
        req.channels = *o.channels;
    }
    if (o.drift_ppm) {
        req.drift_ppm = *o.drift_ppm;
    }
    if (o.payload) {
        req.app_payload_bytes = *o.payload;
    }
    if (o.max_slots) {
        req.max_n_slots = *o.max_slots;
    }
    if (o.slot_ticks || o.tick_rate) {
        const double ticks = o.slot_ticks ? *o.slot_ticks : req.slot_seconds * timebase::kDefaultTickRateHz;
        req.slot_seconds = ticks / o.tick_rate.value_or(timebase::kDefaultTickRateHz);
    }
    if (o.k) {
        req.k = *o.k;
    }
    if (o.app_period) {
        req.t_app_target = *o.app_period;
    } else if (req.k && o.scenario.empty()) {
        req.t_app_target = planner::app_period(*req.k, req.max_n_slots, req.slot_seconds);
    }
    if (req.t_app_target <= 0.0) {
        fmt::print(err, "error: plan needs --app-period or --k\n");
        return kExitUsage;
    }

    planner::NetworkPlan plan;
    try {
        plan = planner::make_plan(req);
    } catch (const planner::InfeasibleError& e) {
        fmt::print(err, "infeasible: {}\n", e.what());
        return kExitInfeasible;
    } catch (const std::logic_error& e) {
        fmt::print(err, "error: {}\n", e.what());
        return kExitUsage;
    }
    print_plan(plan, o.csv, out);
    if (!plan.feasible) {
        fmt::print(err, "infeasible: {}\n", plan.binding_constraint);
        return kExitInfeasible;
    }
    return kExitOk;
}

int run_simulate(const SimulateOptions& o, std::ostream& out, std::ostream& err)
{
    Scenario sc;
    try {
        sc = load_scenario(o.scenario, o.overrides);
        if (o.seed) {
            sc.seed = *o.seed;
        }
        if (o.frames) {
            sc.frames = *o.frames;
        }
        validate(sc);
    } catch (const SchemaError& e) {
        fmt::print(err, "error: {}\n", e.what());
        return kExitUsage;
    } catch (const ScenarioError& e) {
        fmt::print(err, "error: {}: {}\n", o.scenario, e.what());
        return kExitUsage;
    }

    try {
        const SimulationTrace trace = run(sc);
        const auto files = export_trace(trace, sc.power, o.out_dir);
        out << format_report(trace, sc.power);
        fmt::print(out, "wrote {} files to {}\n", files.size(), o.out_dir);
    } catch (const std::exception& e) {
        fmt::print(err, "simulation failed: {}\n", e.what());
        return kExitRuntime;
    }
    return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"LoRa multi-hop TDMA toolkit"};
    app.require_subcommand(1);

    ToaOptions toa;
    auto* toa_cmd = app.add_subcommand("toa", "LoRa time on air of one frame");
    toa_cmd->add_option("--payload", toa.payload, "PHY payload bytes (application bytes with --lorawan)")
        ->required();
    toa_cmd->add_option("--sf", toa.sf, "Spreading factor")->capture_default_str();
    toa_cmd->add_option("--bw", toa.bw, "Bandwidth in Hz")->capture_default_str();
    toa_cmd->add_option("--cr", toa.cr, "Coding rate denominator (4/x)")->capture_default_str();
    toa_cmd->add_option("--preamble", toa.preamble, "Preamble symbols")->capture_default_str();
    toa_cmd->add_flag("--implicit-header", toa.implicit_header, "Implicit header mode");
    toa_cmd->add_flag("--no-crc", toa.no_crc, "Disable payload CRC");
    toa_cmd->add_flag("--ldro", toa.ldro, "Low data rate optimization");
    toa_cmd->add_flag("--lorawan", toa.lorawan, "Add the LoRaWAN frame overhead");

    PlanOptions plan;
    auto* plan_cmd = app.add_subcommand("plan", "Frame length, duty cycle and power for a network");
    plan_cmd->add_option("--scenario", plan.scenario, "Take parameters and topology from a scenario file");
    plan_cmd->add_option("--nodes", plan.nodes, "Devices including the relay")->check(CLI::PositiveNumber);
    plan_cmd->add_option("--app-period", plan.app_period, "Target application period in seconds")
        ->check(CLI::PositiveNumber);
    plan_cmd->add_option("--k", plan.k, "Frames per application period")->check(CLI::PositiveNumber);
    plan_cmd->add_option("--duty-limit", plan.duty_limit, "Duty-cycle limit in percent")->capture_default_str();
    plan_cmd->add_option("--channels", plan.channels, "Channels in use")->check(CLI::PositiveNumber);
    plan_cmd->add_option("--drift-ppm", plan.drift_ppm, "Relative drift between neighbours");
    plan_cmd->add_option("--payload", plan.payload, "Application payload bytes");
    plan_cmd->add_option("--max-slots", plan.max_slots, "Largest admissible slots per frame")
        ->check(CLI::PositiveNumber);
    plan_cmd->add_option("--slot-ticks", plan.slot_ticks, "Slot length in ticks")->check(CLI::PositiveNumber);
    plan_cmd->add_option("--tick-rate", plan.tick_rate, "Tick rate in Hz")->check(CLI::PositiveNumber);
    plan_cmd->add_flag("--csv", plan.csv, "Per-node loads as CSV");

    SimulateOptions sim;
    auto* sim_cmd = app.add_subcommand("simulate", "Run a scenario and write trace files");
    sim_cmd->add_option("scenario", sim.scenario, "Scenario YAML file")->required();
    sim_cmd->add_option("--out", sim.out_dir, "Output directory")->capture_default_str();
    sim_cmd->add_option("--seed", sim.seed, "Override the scenario seed");
    sim_cmd->add_option("--frames", sim.frames, "Override the number of relay frames");
    sim_cmd->add_option("--set", sim.overrides, "Override a scenario field: path.to.key=value")
        ->take_all()
        ->allow_extra_args(false);

    std::vector<std::string> storage;
    storage.reserve(args.size() + 1);
    storage.emplace_back("loratdma");
    storage.insert(storage.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    for (const auto& s : storage) {
        argv.push_back(s.c_str());
    }

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    if (toa_cmd->parsed()) {
        return run_toa(toa, out, err);
    }
    if (plan_cmd->parsed()) {
        return run_plan(plan, out, err);
    }
    return run_simulate(sim, out, err);
}

}  // namespace loratdma::cli
