#include "cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "critlab/ecra.hpp"
#include "critlab/exponents.hpp"
#include "critlab/hiv.hpp"
#include "critlab/md.hpp"
#include "critlab/percolation.hpp"
#include "critlab/pipelines.hpp"
#include "critlab/rng.hpp"
#include "critlab/spin.hpp"

namespace critlab::cli {

namespace fs = std::filesystem;

namespace {

/// Bad input rather than a failed run: exit code 2.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Options {
    std::uint64_t seed = 1;
    std::string out;

    std::string dims = "16,16,16";
    std::string spin_dims = "12,12,12";
    double p_min = 0.2, p_max = 0.3;
    std::size_t p_steps = 11;
    std::size_t samples = 100;
    std::string mode = "bond";

    unsigned n = 8;
    double qvs = 0.9, qis = 0.9;
    std::size_t strains = 1;
    std::uint64_t max_steps = 100000;
    std::uint64_t stride = 1;
    std::uint64_t phase_max_steps = 0;
    std::size_t sweep_stride = 10;
    std::size_t snapshot_stride = 1000;
    std::size_t grid_steps = 11;
    std::size_t replicas = 20;
    std::size_t runs = 100;
    std::string selection = "branch";

    double J = 1.0, h = 0.0;
    double t_min = 2.0, t_max = 6.0;
    std::size_t t_steps = 21;
    std::size_t discard = 1000, measure = 10000, blocks = 20;
    double T = 3.2;
    std::size_t measurements = 200;

    std::size_t a = 64, b = 64;
    double energy = 25.0, impact = 0.0, dt = 0.0005, t_end = 20.0, binding = -3.0, max_drift = 1e-4;

    std::string snapshot;
    double t_start = 0.0, t_stop = 0.0, cooling = 0.95;
    std::size_t moves = 0, restarts = 4;

    std::string events;
    std::size_t fit_min = 2, fit_max = 0;
    double tau_min = 2.0, tau_max = 3.0, tau_step = 0.01;
    std::size_t min_events = 20, system_size = 0;
    std::string critical;

    std::string scale = "smoke";
    std::string manifest;
};

using Settings = std::vector<std::pair<std::string, std::string>>;

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) {
        return s;
    }
    std::string quoted = "\"";
    for (char c : s) {
        quoted += c == '"' ? std::string("\"\"") : std::string(1, c);
    }
    return quoted + "\"";
}

std::string num(double x) { return fmt::format("{}", x); }

std::array<std::size_t, 3> parse_dims(const std::string& text) {
    std::array<std::size_t, 3> dims{};
    std::stringstream in(text);
    std::string part;
    std::size_t k = 0;
    while (std::getline(in, part, ',')) {
        if (k == 3) {
            throw UsageError("--dims takes three comma-separated extents");
        }
        try {
            std::size_t used = 0;
            const long long v = std::stoll(part, &used);
            if (used != part.size() || v <= 0) {
                throw std::invalid_argument(part);
            }
            dims[k++] = static_cast<std::size_t>(v);
        } catch (const std::logic_error&) {
            throw UsageError(fmt::format("--dims: '{}' is not a positive integer", part));
        }
    }
    if (k != 3) {
        throw UsageError("--dims takes three comma-separated extents");
    }
    return dims;
}

fs::path resolve(const std::string& out) {
    fs::path p(out);
    if (const char* base = std::getenv("CRITLAB_OUT_DIR"); base != nullptr && *base != '\0' && p.is_relative()) {
        p = fs::path(base) / p;
    }
    return p;
}

std::ofstream open_file(const fs::path& path) {
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) {
        throw std::runtime_error(fmt::format("cannot write {}", path.string()));
    }
    return f;
}

void write_manifest(const fs::path& path, const std::string& command, const CLI::App& sub, const Settings& extra) {
    std::ofstream f = open_file(path);
    f << "# critlab run manifest\n";
    f << "command = " << command << "\n";
    f << "version = " << version << "\n";
    f << "rng = " << RngStream::algorithm << "\n";
    for (const CLI::Option* opt : sub.get_options()) {
        const std::string name = opt->get_single_name();
        if (name == "help" || name.empty()) {
            continue;
        }
        std::string value;
        if (opt->count() > 0) {
            const auto& results = opt->results();
            for (std::size_t i = 0; i < results.size(); ++i) {
                value += (i > 0 ? " " : "") + results[i];
            }
        } else {
            value = opt->get_default_str();
        }
        if (!value.empty()) {
            f << name << " = " << value << "\n";
        }
    }
    for (const auto& [k, v] : extra) {
        f << "preset." << k << " = " << v << "\n";
    }
}

std::vector<fit::EventRecord> read_events(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw UsageError(fmt::format("cannot read events file {}", path));
    }
    std::vector<fit::EventRecord> events;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty() || line.front() == '#') {
            continue;
        }
        const auto comma = line.find(',');
        if (comma == std::string::npos) {
            throw UsageError(fmt::format("{}:{}: expected 'control,size1 size2 ...'", path, line_no));
        }
        fit::EventRecord event;
        const std::string control = line.substr(0, comma);
        try {
            if (!control.empty()) {
                std::size_t used = 0;
                event.control = std::stod(control, &used);
                if (used != control.size()) {
                    throw std::invalid_argument(control);
                }
            }
            std::stringstream sizes(line.substr(comma + 1));
            std::string token;
            while (sizes >> token) {
                std::size_t used = 0;
                const long long s = std::stoll(token, &used);
                if (used != token.size() || s <= 0) {
                    throw std::invalid_argument(token);
                }
                event.fragment_sizes.push_back(static_cast<std::size_t>(s));
            }
        } catch (const std::logic_error&) {
            throw UsageError(fmt::format("{}:{}: unparsable value", path, line_no));
        }
        events.push_back(std::move(event));
    }
    return events;
}

void write_histogram(const fs::path& path, const std::map<std::size_t, std::size_t>& counts) {
    std::ofstream f = open_file(path);
    f << "size,count\n";
    for (const auto& [s, c] : counts) {
        f << s << ',' << c << '\n';
    }
}

hiv::AutomatonParams hiv_params(const Options& o) {
    hiv::AutomatonParams p;
    p.n = o.n;
    p.q_vs = o.qvs;
    p.q_is = o.qis;
    p.max_steps = o.max_steps;
    p.selection = o.selection == "site" ? hiv::Selection::UniformSite : hiv::Selection::BranchThenEntity;
    return p;
}

// ---------------------------------------------------------------- commands

void percolation_scan(const Options& o, std::ostream& out) {
    const auto dims = parse_dims(o.dims);
    std::vector<double> grid(o.p_steps);
    for (std::size_t i = 0; i < o.p_steps; ++i) {
        grid[i] = o.p_steps == 1 ? o.p_min : o.p_min + (o.p_max - o.p_min) * static_cast<double>(i) / static_cast<double>(o.p_steps - 1);
    }
    const auto scan = perc::threshold_scan(dims, grid, o.samples, RngStream(o.seed),
                                           o.mode == "site" ? perc::Mode::Site : perc::Mode::Bond);
    std::ofstream f = open_file(resolve(o.out));
    f << "p,spanning_prob,spanning_prob_se,p_inf,p_inf_se,second_moment,second_moment_se\n";
    for (const auto& r : scan.rows) {
        f << fmt::format("{},{},{},{},{},{},{}\n", r.p, r.spanning_prob, r.spanning_prob_se, r.p_inf, r.p_inf_se,
                         r.second_moment, r.second_moment_se);
    }
    if (scan.p_c) {
        out << fmt::format("p_c ~ {:.5f}\n", *scan.p_c);
    }
}

void hiv_run(const Options& o, std::ostream&) {
    RngStream rng(o.seed);
    hiv::AutomatonParams p = hiv_params(o);
    p.initial_strains = hiv::random_strains(o.n, o.strains, rng);
    p.validate();
    const auto result = hiv::run(p, rng, o.stride);
    std::ofstream f = open_file(resolve(o.out));
    f << "step,S,I,R\n";
    for (const auto& t : result.trajectory) {
        f << t.step << ',' << t.S << ',' << t.I << ',' << t.R << '\n';
    }
}

void hiv_phase(const Options& o, std::ostream&) {
    hiv::PhaseOptions p;
    p.n = o.n;
    p.grid_steps = o.grid_steps;
    p.replicas = o.replicas;
    p.max_steps = o.phase_max_steps;
    p.initial_strains = o.strains;
    p.selection = o.selection == "site" ? hiv::Selection::UniformSite : hiv::Selection::BranchThenEntity;
    const auto cells = hiv::phase_diagram(p, RngStream(o.seed));
    std::ofstream f = open_file(resolve(o.out));
    f << "qvs,qis,infected_ratio,se\n";
    for (const auto& c : cells) {
        f << fmt::format("{},{},{},{}\n", c.q_vs, c.q_is, c.infected_ratio, c.se);
    }
}

void hiv_clusters(const Options& o, std::ostream&) {
    const RngStream root(o.seed);
    std::map<std::size_t, std::size_t> counts;
    for (std::size_t r = 0; r < o.runs; ++r) {
        RngStream rng = substream(root, r);
        hiv::AutomatonParams p = hiv_params(o);
        p.initial_strains = hiv::random_strains(o.n, o.strains, rng);
        p.validate();
        const auto result = hiv::run(p, rng, std::max<std::uint64_t>(p.max_steps, 1));
        for (const auto& [s, c] : hiv::infected_clusters(result.final_space).size_histogram()) {
            counts[s] += c;
        }
    }
    write_histogram(resolve(o.out), counts);
}

void cmr_scan(const Options& o, std::ostream& out) {
    const auto dims = parse_dims(o.spin_dims);
    spin::ScanOptions s;
    s.J = o.J;
    s.h = o.h;
    s.sweeps_discard = o.discard;
    s.sweeps_measure = o.measure;
    s.blocks = o.blocks;
    std::vector<double> grid(o.t_steps);
    for (std::size_t i = 0; i < o.t_steps; ++i) {
        grid[i] = o.t_steps == 1 ? o.t_min : o.t_min + (o.t_max - o.t_min) * static_cast<double>(i) / static_cast<double>(o.t_steps - 1);
    }
    const auto scan = spin::susceptibility_scan(LatticeGeometry(dims, Boundary::Periodic), grid, s, RngStream(o.seed));
    std::ofstream f = open_file(resolve(o.out));
    f << "T,mag,mag_se,chi,chi_se,energy_per_site,accept_rate\n";
    for (const auto& x : scan.samples) {
        f << fmt::format("{},{},{},{},{},{},{}\n", x.T, x.mean_magnetization, x.mean_magnetization_se,
                         x.susceptibility, x.susceptibility_se, x.energy_per_site, x.acceptance_rate);
    }
    out << fmt::format("susceptibility peak at T = {}\n", scan.t_c);
}

void cmr_clusters(const Options& o, std::ostream&) {
    const auto dims = parse_dims(o.spin_dims);
    RngStream rng(o.seed);
    spin::SpinLattice s = spin::make_lattice(LatticeGeometry(dims, Boundary::Periodic), o.J, o.h, o.T,
                                             spin::Start::Aligned, rng);
    const spin::HeatBath bath(s);
    for (std::size_t k = 0; k < o.discard; ++k) {
        bath.sweep(s, rng);
    }
    std::map<std::size_t, std::size_t> counts;
    for (std::size_t m = 0; m < o.measurements; ++m) {
        for (std::size_t k = 0; k < o.sweep_stride; ++k) {
            bath.sweep(s, rng);
        }
        for (const auto& [size, c] : spin::domain_clusters(s).size_histogram()) {
            counts[size] += c;
        }
    }
    write_histogram(resolve(o.out), counts);
}

void md_collide(const Options& o, std::ostream& out) {
    const md::PairPotential potential;
    RngStream rng(o.seed);
    const auto a = md::prepare_droplet(o.a, o.binding, potential, rng);
    const auto b = md::prepare_droplet(o.b, o.binding, potential, rng);
    md::CollisionOptions c;
    c.dt = o.dt;
    c.t_end = o.t_end;
    c.snapshot_stride = o.snapshot_stride;
    c.max_drift = o.max_drift;
    const auto result = md::collide(a.system, b.system, o.energy, o.impact, potential, c);
    const fs::path dir = resolve(o.out);
    fs::create_directories(dir);
    std::ofstream index = open_file(dir / "snapshots.csv");
    index << "file,time,energy,px,py,pz\n";
    for (std::size_t k = 0; k < result.snapshots.size(); ++k) {
        const auto& snap = result.snapshots[k];
        const std::string name = fmt::format("snapshot_{:05d}.txt", k);
        std::ofstream f = open_file(dir / name);
        md::write_snapshot(f, snap);
        index << fmt::format("{},{},{},{},{},{}\n", name, snap.time, snap.energy, snap.momentum.x, snap.momentum.y,
                             snap.momentum.z);
    }
    out << fmt::format("{} snapshots, max relative energy drift {:.3g}\n", result.snapshots.size(), result.max_drift);
}

void ecra_command(const Options& o, std::ostream&) {
    std::ifstream in(o.snapshot);
    if (!in) {
        throw UsageError(fmt::format("cannot read snapshot {}", o.snapshot));
    }
    md::Snapshot snap;
    try {
        snap = md::read_snapshot(in);
    } catch (const std::runtime_error& e) {
        throw UsageError(fmt::format("{}: {}", o.snapshot, e.what()));
    }
    const md::PairPotential potential;
    auto schedule = ecra::AnnealSchedule::defaults_for(snap.system, potential);
    if (o.t_start > 0.0) {
        schedule.t_start = o.t_start;
    }
    if (o.t_stop > 0.0) {
        schedule.t_end = o.t_stop;
    }
    if (o.moves > 0) {
        schedule.moves_per_temperature = o.moves;
    }
    schedule.cooling_factor = o.cooling;
    schedule.restarts = o.restarts;
    schedule.validate();
    const auto partition = ecra::anneal(snap.system, potential, schedule, RngStream(o.seed));
    const fs::path path = resolve(o.out);
    std::ofstream f = open_file(path);
    f << "cluster_id,size,e_int\n";
    std::vector<std::size_t> sizes(partition.cluster_count(), 0);
    for (std::size_t c : partition.assignment) {
        ++sizes[c];
    }
    for (std::size_t c = 0; c < sizes.size(); ++c) {
        f << fmt::format("{},{},{}\n", c, sizes[c], partition.per_cluster_energy[c]);
    }
    std::ofstream summary = open_file(fs::path(path.string() + ".summary.csv"));
    summary << "multiplicity,total_e_int\n" << fmt::format("{},{}\n", partition.cluster_count(), partition.internal_energy);
}

void fit_command(const Options& o, std::ostream& err) {
    const auto events = read_events(o.events);
    if (events.empty()) {
        throw UsageError("events file holds no events");
    }
    std::size_t heaviest = 0;
    for (const auto& e : events) {
        heaviest = std::max(heaviest, e.total_mass());
    }
    const std::size_t system = o.system_size;
    fit::FitRange range = fit::default_fit_range(system > 0 ? system : heaviest);
    range.a_min = o.fit_min;
    if (o.fit_max > 0) {
        range.a_max = o.fit_max;
    }
    const fit::TauGrid grid{o.tau_min, o.tau_max, o.tau_step};
    const auto whole = fit::fit_tau(fit::build_histogram(events, system), range, grid);

    const fs::path path = resolve(o.out);
    std::ofstream table = open_file(path);
    std::ofstream summary = open_file(fs::path(path.string() + ".summary.csv"));
    table << "bin,tau,q0,chi2_reduced,n_events\n";
    summary << "quantity,value,stderr,fit_range\n";
    const std::string range_text = fmt::format("{}-{}", range.a_min, range.a_max);
    summary << fmt::format("tau,{},{},{}\n", whole.tau, whole.tau_se, range_text);
    try {
        const auto crit = fit::critical_multiplicity(events, grid, range, o.min_events, system);
        for (const auto& bin : crit.bins) {
            if (bin.fit) {
                table << fmt::format("{}-{},{},{},{},{}\n", bin.m_lo, bin.m_hi, bin.fit->tau, bin.fit->q0,
                                     bin.fit->chi2_reduced(), bin.n_events);
            }
            if (bin.fit && bin.m_representative == crit.m_c) {
                summary << fmt::format("tau_at_m_c,{},{},{}\n", bin.fit->tau, bin.fit->tau_se, range_text);
            }
        }
        summary << fmt::format("m_c,{},,\n", crit.m_c);
    } catch (const fit::FitError& e) {
        err << "multiplicity binning skipped: " << e.what() << "\n";
    }
    table << fmt::format("all,{},{},{},{}\n", whole.tau, whole.q0, whole.chi2_reduced(), whole.n_events);

    if (!o.critical.empty()) {
        double c_crit = 0.0;
        try {
            c_crit = std::stod(o.critical);
        } catch (const std::logic_error&) {
            throw UsageError("--critical takes a number");
        }
        const auto m2 = fit::moments(events, 2, true, system);
        std::vector<std::pair<double, double>> below, above;
        for (const auto& p : m2) {
            if (p.control < c_crit && p.moment > 0.0) {
                below.emplace_back(p.control, p.moment);
            } else if (p.control > c_crit && p.a_max_mean > 0.0) {
                above.emplace_back(p.control, p.a_max_mean);
            }
        }
        const fit::ScalingWindow all_below{fit::Side::Below, 0.0, 1e300}, all_above{fit::Side::Above, 0.0, 1e300};
        try {
            const auto g = fit::extract_gamma(below, c_crit, all_below);
            summary << fmt::format("gamma,{},{},{}-{}\n", g.value, g.error, g.eps_min, g.eps_max);
        } catch (const fit::FitError& e) {
            err << "gamma skipped: " << e.what() << "\n";
        }
        try {
            const auto b = fit::extract_beta(above, c_crit, all_above);
            summary << fmt::format("beta,{},{},{}-{}\n", b.value, b.error, b.eps_min, b.eps_max);
        } catch (const fit::FitError& e) {
            err << "beta skipped: " << e.what() << "\n";
        }
    }
}

void table1_command(const Options& o, std::ostream& out, Settings& extra) {
    pipeline::Scale scale;
    try {
        scale = pipeline::parse_scale(o.scale);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    const auto table = pipeline::table1(scale, RngStream(o.seed));
    extra = table.settings;
    const fs::path dir = resolve(o.out);
    fs::create_directories(dir);
    std::ofstream f = open_file(dir / "table1.csv");
    f << "system,tau,stderr,reference,regime,fit_min,fit_max,n_events,status\n";
    for (const auto& row : table.rows) {
        f << csv_field(row.system) << ',' << (row.tau ? num(*row.tau) : "") << ','
          << (row.tau ? num(row.stderr_tau) : "") << ',' << csv_field(row.reference) << ','
          << csv_field(row.regime) << ',' << row.fit_range.a_min << ',' << row.fit_range.a_max << ','
          << row.n_events << ',' << csv_field(row.status) << '\n';
        out << fmt::format("{:<30} tau = {:<8} (reference {}) {}\n", row.system,
                           row.tau ? fmt::format("{:.3f}", *row.tau) : "-", row.reference, row.status);
    }
}

// ---------------------------------------------------------------- wiring

struct Registered {
    CLI::App* app;
    bool directory_output;
    std::function<void(Settings&)> body;
};

struct Parser {
    CLI::App app{"Critical-exponent laboratory: percolation, HIV automaton, spin-1 lattice, MD collisions."};
    Options o;
    std::vector<std::pair<std::string, Registered>> commands;
    CLI::App* replay = nullptr;

    Parser(std::ostream& out, std::ostream& err) {
        app.name("critlab");
        app.require_subcommand(1);
        app.option_defaults()->always_capture_default();
        app.set_version_flag("--version", version);

        auto add = [&](const std::string& name, const std::string& help, bool dir, auto&& body) {
            CLI::App* sub = app.add_subcommand(name, help);
            sub->set_help_flag("--help", "Print this help message and exit");
            sub->add_option("--seed", o.seed, "RNG seed");
            sub->add_option("--out", o.out, dir ? "Output directory" : "Output CSV")->required();
            commands.push_back({name, {sub, dir, std::forward<decltype(body)>(body)}});
            return sub;
        };

        auto* ps = add("percolation-scan", "Spanning probability, P_inf and S over a grid of p", false,
                       [&](Settings&) { percolation_scan(o, out); });
        ps->add_option("--dims", o.dims, "Lx,Ly,Lz");
        ps->add_option("--p-min", o.p_min)->check(CLI::Range(0.0, 1.0));
        ps->add_option("--p-max", o.p_max)->check(CLI::Range(0.0, 1.0));
        ps->add_option("--p-steps", o.p_steps)->check(CLI::PositiveNumber);
        ps->add_option("--samples", o.samples)->check(CLI::PositiveNumber);
        ps->add_option("--mode", o.mode)->check(CLI::IsMember({"bond", "site"}));

        const auto hiv_common = [&](CLI::App* s) {
            s->add_option("--n", o.n, "Sequence length in bits")->check(CLI::Range(1, 24));
            s->add_option("--strains", o.strains, "Random initial strains");
            s->add_option("--selection", o.selection, "branch or site")->check(CLI::IsMember({"branch", "site"}));
        };
        auto* hr = add("hiv-run", "One automaton trajectory", false, [&](Settings&) { hiv_run(o, out); });
        hiv_common(hr);
        hr->add_option("--max-steps", o.max_steps);
        hr->add_option("--qvs", o.qvs)->check(CLI::Range(0.0, 1.0));
        hr->add_option("--qis", o.qis)->check(CLI::Range(0.0, 1.0));
        hr->add_option("--stride", o.stride, "Steps between trajectory rows")->check(CLI::PositiveNumber);
        auto* hp = add("hiv-phase", "Final infected ratio over the (q_vs, q_is) grid", false,
                       [&](Settings&) { hiv_phase(o, out); });
        hiv_common(hp);
        hp->add_option("--max-steps", o.phase_max_steps, "0 means 8 * 2^n");
        hp->add_option("--grid-steps", o.grid_steps)->check(CLI::Range(2, 1000));
        hp->add_option("--replicas", o.replicas)->check(CLI::PositiveNumber);
        auto* hc = add("hiv-clusters", "Infected-cluster size histogram at the end of each run", false,
                       [&](Settings&) { hiv_clusters(o, out); });
        hiv_common(hc);
        hc->add_option("--max-steps", o.max_steps);
        hc->add_option("--qvs", o.qvs)->check(CLI::Range(0.0, 1.0));
        hc->add_option("--qis", o.qis)->check(CLI::Range(0.0, 1.0));
        hc->add_option("--runs", o.runs)->check(CLI::PositiveNumber);

        const auto spin_common = [&](CLI::App* s) {
            s->add_option("--dims", o.spin_dims, "Lx,Ly,Lz");
            s->add_option("--J", o.J);
            s->add_option("--h", o.h);
            s->add_option("--discard", o.discard, "Equilibration sweeps");
        };
        auto* cs = add("cmr-scan", "Magnetization and susceptibility over a temperature grid", false,
                       [&](Settings&) { cmr_scan(o, out); });
        spin_common(cs);
        cs->add_option("--t-min", o.t_min)->check(CLI::PositiveNumber);
        cs->add_option("--t-max", o.t_max)->check(CLI::PositiveNumber);
        cs->add_option("--t-steps", o.t_steps)->check(CLI::PositiveNumber);
        cs->add_option("--measure", o.measure, "Measurement sweeps")->check(CLI::PositiveNumber);
        cs->add_option("--blocks", o.blocks)->check(CLI::Range(2, 100000));
        auto* cc = add("cmr-clusters", "Spin-domain size histogram at one temperature", false,
                       [&](Settings&) { cmr_clusters(o, out); });
        spin_common(cc);
        cc->add_option("--T", o.T)->check(CLI::PositiveNumber);
        cc->add_option("--measurements", o.measurements)->check(CLI::PositiveNumber);
        cc->add_option("--stride", o.sweep_stride, "Sweeps between measurements")->check(CLI::PositiveNumber);

        auto* mc = add("md-collide", "Droplet-droplet collision with snapshots", true,
                       [&](Settings&) { md_collide(o, out); });
        mc->add_option("--a", o.a, "Projectile particles")->check(CLI::PositiveNumber);
        mc->add_option("--b", o.b, "Target particles")->check(CLI::PositiveNumber);
        mc->add_option("--energy", o.energy, "Beam energy per projectile particle")->check(CLI::NonNegativeNumber);
        mc->add_option("--impact", o.impact, "Impact parameter");
        mc->add_option("--binding", o.binding, "Droplet energy per particle at most");
        mc->add_option("--dt", o.dt)->check(CLI::PositiveNumber);
        mc->add_option("--t-end", o.t_end)->check(CLI::PositiveNumber);
        mc->add_option("--stride", o.snapshot_stride, "Steps between snapshots")->check(CLI::PositiveNumber);
        mc->add_option("--max-drift", o.max_drift)->check(CLI::PositiveNumber);

        auto* ec = add("ecra", "Minimum-energy fragment partition of a snapshot", false,
                       [&](Settings&) { ecra_command(o, out); });
        ec->add_option("--snapshot", o.snapshot)->required()->check(CLI::ExistingFile);
        ec->add_option("--t-start", o.t_start, "0 derives it from the snapshot")->check(CLI::NonNegativeNumber);
        ec->add_option("--t-end", o.t_stop, "0 means t-start / 1000")->check(CLI::NonNegativeNumber);
        ec->add_option("--cooling", o.cooling)->check(CLI::Range(0.0, 1.0));
        ec->add_option("--moves", o.moves, "Moves per temperature, 0 means 50 n");
        ec->add_option("--restarts", o.restarts)->check(CLI::PositiveNumber);

        auto* ft = add("fit", "Power-law tau fit of an event file", false, [&](Settings&) { fit_command(o, err); });
        ft->add_option("--events", o.events)->required()->check(CLI::ExistingFile);
        ft->add_option("--fit-min", o.fit_min)->check(CLI::PositiveNumber);
        ft->add_option("--fit-max", o.fit_max, "0 means system size / 4");
        ft->add_option("--tau-min", o.tau_min);
        ft->add_option("--tau-max", o.tau_max);
        ft->add_option("--tau-step", o.tau_step)->check(CLI::PositiveNumber);
        ft->add_option("--min-events", o.min_events, "Events per multiplicity bin")->check(CLI::PositiveNumber);
        ft->add_option("--system-size", o.system_size, "0 means each event's total mass");
        ft->add_option("--critical", o.critical, "Critical control value for gamma and beta");

        auto* tb = add("table1", "Tau for every system next to the reference values", true,
                       [&](Settings& extra) { table1_command(o, out, extra); });
        tb->add_option("--scale", o.scale)->check(CLI::IsMember({"smoke", "desk"}));

        replay = app.add_subcommand("replay", "Re-run the command recorded in a manifest");
        replay->add_option("--manifest", o.manifest)->required()->check(CLI::ExistingFile);
        replay->add_option("--out", o.out, "Write to this target instead of the recorded one");
    }

    const Registered* find(const std::string& name) const {
        for (const auto& [n, r] : commands) {
            if (n == name) {
                return &r;
            }
        }
        return nullptr;
    }
};

int execute(std::vector<std::string> args, std::ostream& out, std::ostream& err, int depth) {
    Parser parser(out, err);
    std::reverse(args.begin(), args.end());
    try {
        parser.app.parse(args);
    } catch (const CLI::ParseError& e) {
        const int code = parser.app.exit(e, out, err);
        return code == 0 ? exit_ok : exit_usage;
    }
    try {
        if (parser.replay->parsed()) {
            if (depth > 0) {
                throw UsageError("a manifest cannot replay another manifest");
            }
            auto replayed = replay_args(read_manifest(parser.o.manifest));
            if (!parser.o.out.empty()) {
                for (std::size_t i = 0; i + 1 < replayed.size(); ++i) {
                    if (replayed[i] == "--out") {
                        replayed[i + 1] = parser.o.out;
                    }
                }
            }
            return execute(replayed, out, err, depth + 1);
        }
        for (const auto& [name, reg] : parser.commands) {
            if (reg.app->parsed()) {
                Settings extra;
                reg.body(extra);
                const fs::path target = resolve(parser.o.out);
                write_manifest(reg.directory_output ? target / "manifest" : fs::path(target.string() + ".manifest"),
                               name, *reg.app, extra);
            }
        }
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        return exit_usage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return exit_runtime;
    }
    return exit_ok;
}

}  // namespace

std::vector<std::pair<std::string, std::string>> read_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw UsageError(fmt::format("cannot read manifest {}", path));
    }
    std::vector<std::pair<std::string, std::string>> entries;
    std::string line;
    const auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        const auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    while (std::getline(in, line)) {
        const std::string t = trim(line);
        if (t.empty() || t.front() == '#') {
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw UsageError(fmt::format("{}: malformed manifest line '{}'", path, t));
        }
        entries.emplace_back(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
    }
    return entries;
}

std::vector<std::string> replay_args(const std::vector<std::pair<std::string, std::string>>& manifest) {
    std::string command;
    for (const auto& [k, v] : manifest) {
        if (k == "command") {
            command = v;
        }
    }
    std::ostringstream sink;
    Parser parser(sink, sink);
    const Registered* reg = parser.find(command);
    if (reg == nullptr) {
        throw UsageError(fmt::format("manifest names no known command ('{}')", command));
    }
    std::vector<std::string> args{command};
    for (const auto& [k, v] : manifest) {
        if (k != "help" && reg->app->get_option_no_throw("--" + k) != nullptr) {
            args.push_back("--" + k);
            args.push_back(v);
        }
    }
    return args;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    return execute(args, out, err, 0);
}

int run(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return run(args, std::cout, std::cerr);
}

}  // namespace critlab::cli
