// ksgdiffuse: k-space-guided diffusion reconstruction driver.
//
// Subcommands: schedule dump, mask make, reconstruct, ablate, metrics,
// oracle, phantom. Exit codes: 0 ok, 2 invalid config, 3 I/O, 4 plugin,
// 5 numerical failure.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "ksgdiffuse/ksgdiffuse.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace ksg;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitPlugin = 4;
constexpr int kExitNumerical = 5;

double default_center_fraction(double acceleration) {
    if (std::abs(acceleration - 4.0) < 1e-9) return 0.08;
    if (std::abs(acceleration - 6.0) < 1e-9) return 0.06;
    if (std::abs(acceleration - 8.0) < 1e-9) return 0.04;
    if (std::abs(acceleration - 10.0) < 1e-9) return 0.02;
    throw std::invalid_argument(
        "no default center fraction for acceleration " + std::to_string(acceleration) +
        "; pass --center-fraction explicitly");
}

json schedule_to_json(const Schedule& s) {
    json j;
    switch (s.kind()) {
        case ScheduleKind::Linear: j["kind"] = "linear"; break;
        case ScheduleKind::Cosine: j["kind"] = "cosine"; break;
        case ScheduleKind::Respaced: j["kind"] = "respaced"; break;
    }
    j["num_steps"] = s.num_steps();
    j["timestep"] = s.timesteps();
    j["beta"] = s.beta();
    j["alpha"] = s.alpha();
    j["alpha_bar"] = s.alpha_bar();
    j["sigma2"] = s.sigma2();
    return j;
}

// ---- reconstruct / ablate shared configuration ------------------------------

struct MaskSpec {
    std::string path;      // load from MSK1 if set
    std::string kind = "cartesian";
    double acceleration = 4.0;
    double center_fraction = -1.0; // <0: use the per-acceleration default
    std::uint64_t seed = 0;
};

struct DenoiserSpec {
    std::string kind = "gaussian"; // gaussian | zero | plugin
    std::string mu_path;           // gaussian: CIM1 prior mean (default smooth bump)
    double mu_amplitude = 5.0;
    double s2 = 1.0;
    std::string transport = "stdio"; // plugin: stdio | tcp
    std::string command;             // plugin stdio: command line
    std::string host = "127.0.0.1";
    int port = 0;
    int timeout_ms = 10000;
};

struct RunConfig {
    std::string schedule_kind = "cosine";
    std::size_t T = 4000;
    double beta_start = 1e-4;
    double beta_end = 0.02;
    SamplerConfig sampler;
    MaskSpec mask;
    DenoiserSpec denoiser;
    std::string input;
    std::string out_dir = ".";
    bool write_png = false;
};

// Bind RunConfig fields to CLI11 options. A JSON config (if any) is applied
// as defaults before parsing, so explicit flags always win.
void add_run_options(CLI::App* cmd, RunConfig& rc, std::string& config_path) {
    cmd->add_option("--config", config_path, "JSON config file (flags override)");
    cmd->add_option("--schedule", rc.schedule_kind, "cosine|linear")->capture_default_str();
    cmd->add_option("--T", rc.sampler.T, "full schedule length")->capture_default_str();
    cmd->add_option("--beta-start", rc.beta_start)->capture_default_str();
    cmd->add_option("--beta-end", rc.beta_end)->capture_default_str();
    cmd->add_option("--k", rc.sampler.k, "coarse re-spacing factor")->capture_default_str();
    cmd->add_option("--N", rc.sampler.N, "Monte-Carlo chains")->capture_default_str();
    cmd->add_option("--T-refine", rc.sampler.T_refine, "refinement steps")->capture_default_str();
    cmd->add_option("--ksg-noise", rc.sampler.ksg_noise, "noise x_obs per KSG step")
        ->capture_default_str();
    cmd->add_option("--refine", rc.sampler.refine, "run refinement")->capture_default_str();
    cmd->add_option("--keep-samples", rc.sampler.keep_samples, "write coarse samples")
        ->capture_default_str();
    cmd->add_option("--seed", rc.sampler.seed, "master sampler seed")->capture_default_str();
    cmd->add_option("--threads", rc.sampler.threads, "worker threads (0 = auto)")
        ->capture_default_str();
    cmd->add_option("--mask", rc.mask.path, "MSK1 mask file (overrides mask generation)");
    cmd->add_option("--mask-kind", rc.mask.kind, "cartesian|gaussian")->capture_default_str();
    cmd->add_option("--acceleration", rc.mask.acceleration)->capture_default_str();
    cmd->add_option("--center-fraction", rc.mask.center_fraction,
                    "fully-sampled center fraction (default depends on acceleration)");
    cmd->add_option("--mask-seed", rc.mask.seed)->capture_default_str();
    cmd->add_option("--denoiser", rc.denoiser.kind, "gaussian|zero|plugin")
        ->capture_default_str();
    cmd->add_option("--mu", rc.denoiser.mu_path, "CIM1 prior mean (default: smooth bump)");
    cmd->add_option("--mu-amplitude", rc.denoiser.mu_amplitude)->capture_default_str();
    cmd->add_option("--s2", rc.denoiser.s2, "Gaussian prior variance")->capture_default_str();
    cmd->add_option("--plugin-transport", rc.denoiser.transport, "stdio|tcp")
        ->capture_default_str();
    cmd->add_option("--plugin-command", rc.denoiser.command, "plugin command line (stdio)");
    cmd->add_option("--plugin-host", rc.denoiser.host)->capture_default_str();
    cmd->add_option("--plugin-port", rc.denoiser.port)->capture_default_str();
    cmd->add_option("--plugin-timeout-ms", rc.denoiser.timeout_ms)->capture_default_str();
    cmd->add_option("--input", rc.input, "CIM1 input (image = ground truth, kspace = x_obs)")
        ->required();
    cmd->add_option("--out-dir", rc.out_dir, "output directory")->capture_default_str();
    cmd->add_flag("--png", rc.write_png, "also write a magnitude PNG");
}

template <typename T>
void from_json_if(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

void apply_json_config(const std::string& path, RunConfig& rc) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw std::invalid_argument("config parse error: " + std::string(e.what()));
    }
    from_json_if(j, "schedule", rc.schedule_kind);
    from_json_if(j, "T", rc.sampler.T);
    from_json_if(j, "beta_start", rc.beta_start);
    from_json_if(j, "beta_end", rc.beta_end);
    from_json_if(j, "k", rc.sampler.k);
    from_json_if(j, "N", rc.sampler.N);
    from_json_if(j, "T_refine", rc.sampler.T_refine);
    from_json_if(j, "ksg_noise", rc.sampler.ksg_noise);
    from_json_if(j, "refine", rc.sampler.refine);
    from_json_if(j, "keep_samples", rc.sampler.keep_samples);
    from_json_if(j, "seed", rc.sampler.seed);
    from_json_if(j, "threads", rc.sampler.threads);
    if (j.contains("mask")) {
        const json& m = j.at("mask");
        from_json_if(m, "path", rc.mask.path);
        from_json_if(m, "kind", rc.mask.kind);
        from_json_if(m, "acceleration", rc.mask.acceleration);
        from_json_if(m, "center_fraction", rc.mask.center_fraction);
        from_json_if(m, "seed", rc.mask.seed);
    }
    if (j.contains("denoiser")) {
        const json& d = j.at("denoiser");
        from_json_if(d, "kind", rc.denoiser.kind);
        from_json_if(d, "mu", rc.denoiser.mu_path);
        from_json_if(d, "mu_amplitude", rc.denoiser.mu_amplitude);
        from_json_if(d, "s2", rc.denoiser.s2);
        from_json_if(d, "transport", rc.denoiser.transport);
        from_json_if(d, "command", rc.denoiser.command);
        from_json_if(d, "host", rc.denoiser.host);
        from_json_if(d, "port", rc.denoiser.port);
        from_json_if(d, "timeout_ms", rc.denoiser.timeout_ms);
    }
    from_json_if(j, "input", rc.input);
    from_json_if(j, "out_dir", rc.out_dir);
    from_json_if(j, "png", rc.write_png);
}

json config_to_json(const RunConfig& rc) {
    json j;
    j["schedule"] = rc.schedule_kind;
    j["T"] = rc.sampler.T;
    if (rc.schedule_kind == "linear") {
        j["beta_start"] = rc.beta_start;
        j["beta_end"] = rc.beta_end;
    }
    j["k"] = rc.sampler.k;
    j["N"] = rc.sampler.N;
    j["T_refine"] = rc.sampler.T_refine;
    j["ksg_noise"] = rc.sampler.ksg_noise;
    j["refine"] = rc.sampler.refine;
    j["keep_samples"] = rc.sampler.keep_samples;
    j["seed"] = rc.sampler.seed;
    j["threads"] = rc.sampler.threads;
    j["mask"] = {{"path", rc.mask.path},
                 {"kind", rc.mask.kind},
                 {"acceleration", rc.mask.acceleration},
                 {"center_fraction", rc.mask.center_fraction},
                 {"seed", rc.mask.seed}};
    json d;
    d["kind"] = rc.denoiser.kind;
    if (rc.denoiser.kind == "gaussian") {
        d["mu"] = rc.denoiser.mu_path;
        d["mu_amplitude"] = rc.denoiser.mu_amplitude;
        d["s2"] = rc.denoiser.s2;
    } else if (rc.denoiser.kind == "plugin") {
        d["transport"] = rc.denoiser.transport;
        d["command"] = rc.denoiser.command;
        d["host"] = rc.denoiser.host;
        d["port"] = rc.denoiser.port;
        d["timeout_ms"] = rc.denoiser.timeout_ms;
    }
    j["denoiser"] = d;
    j["input"] = rc.input;
    j["out_dir"] = rc.out_dir;
    return j;
}

Schedule build_schedule(const RunConfig& rc) {
    if (rc.schedule_kind == "cosine") return Schedule::cosine(rc.sampler.T);
    if (rc.schedule_kind == "linear") {
        return Schedule::linear(rc.sampler.T, rc.beta_start, rc.beta_end);
    }
    throw std::invalid_argument("unknown schedule kind: " + rc.schedule_kind);
}

Mask build_mask(const RunConfig& rc, std::size_t h, std::size_t w) {
    if (!rc.mask.path.empty()) {
        Mask m = read_mask(rc.mask.path);
        if (m.height() != h || m.width() != w) {
            throw std::invalid_argument("mask shape does not match input");
        }
        return m;
    }
    const double cf = rc.mask.center_fraction >= 0.0
                          ? rc.mask.center_fraction
                          : default_center_fraction(rc.mask.acceleration);
    if (rc.mask.kind == "cartesian") {
        return make_cartesian_mask(h, w, rc.mask.acceleration, cf, rc.mask.seed);
    }
    if (rc.mask.kind == "gaussian") {
        return make_gaussian_mask_1d(h, w, rc.mask.acceleration, cf, rc.mask.seed);
    }
    throw std::invalid_argument("unknown mask kind: " + rc.mask.kind);
}

std::vector<std::string> split_command(const std::string& command) {
    std::vector<std::string> argv;
    std::string cur;
    for (char c : command) {
        if (c == ' ') {
            if (!cur.empty()) argv.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) argv.push_back(std::move(cur));
    return argv;
}

DenoiserFactory build_denoiser_factory(const RunConfig& rc, std::size_t h, std::size_t w) {
    const DenoiserSpec& d = rc.denoiser;
    if (d.kind == "zero") {
        return shared_denoiser(std::make_shared<ZeroDenoiser>());
    }
    if (d.kind == "gaussian") {
        ComplexImage mu = d.mu_path.empty() ? smooth_bump(h, w, d.mu_amplitude)
                                            : ComplexImage(read_cim(d.mu_path).grid);
        if (mu.height() != h || mu.width() != w) {
            throw std::invalid_argument("prior mean shape does not match input");
        }
        return shared_denoiser(std::make_shared<GaussianPriorDenoiser>(std::move(mu), d.s2));
    }
    if (d.kind == "plugin") {
        const std::size_t T = rc.sampler.T;
        if (d.transport == "stdio") {
            if (d.command.empty()) {
                throw std::invalid_argument("plugin stdio transport requires --plugin-command");
            }
            const auto argv = split_command(d.command);
            const int timeout = d.timeout_ms;
            return [argv, h, w, T, timeout]() -> std::shared_ptr<const Denoiser> {
                auto conn = std::make_shared<PluginConnection>(
                    PluginConnection::spawn(argv, h, w, T, timeout));
                return std::make_shared<PluginDenoiser>(std::move(conn));
            };
        }
        if (d.transport == "tcp") {
            if (d.port <= 0 || d.port > 65535) {
                throw std::invalid_argument("plugin tcp transport requires a valid --plugin-port");
            }
            const std::string host = d.host;
            const auto port = static_cast<std::uint16_t>(d.port);
            const int timeout = d.timeout_ms;
            return [host, port, h, w, T, timeout]() -> std::shared_ptr<const Denoiser> {
                auto conn = std::make_shared<PluginConnection>(
                    PluginConnection::connect_tcp(host, port, h, w, T, timeout));
                return std::make_shared<PluginDenoiser>(std::move(conn));
            };
        }
        throw std::invalid_argument("unknown plugin transport: " + d.transport);
    }
    throw std::invalid_argument("unknown denoiser kind: " + d.kind);
}

struct LoadedProblem {
    KSpace x_obs;
    Mask mask;
    std::optional<ComplexImage> truth;
};

LoadedProblem load_problem(const RunConfig& rc) {
    const CimFile input = read_cim(rc.input);
    const std::size_t h = input.grid.height(), w = input.grid.width();
    Mask mask = build_mask(rc, h, w);
    if (input.domain == Domain::Image) {
        ComplexImage truth(input.grid);
        KSpace x_obs = apply_mask(fft2c(truth), mask);
        return {std::move(x_obs), std::move(mask), std::move(truth)};
    }
    KSpace x_obs = apply_mask(KSpace(input.grid), mask);
    return {std::move(x_obs), std::move(mask), std::nullopt};
}

double consistency_error(const ComplexImage& mean, const KSpace& x_obs, const Mask& mask) {
    const KSpace km = fft2c(mean);
    double err = 0.0;
    for (std::size_t i = 0; i < km.size(); ++i) {
        if (mask[i]) err = std::max(err, std::abs(km[i] - x_obs[i]));
    }
    return err;
}

void write_json(const fs::path& path, const json& j) {
    io_detail::atomic_write(path, j.dump(2) + "\n");
}

// ---- subcommand implementations ---------------------------------------------

int cmd_schedule_dump(const std::string& kind, std::size_t T, double beta_start,
                      double beta_end, std::size_t respace_n) {
    Schedule s = kind == "linear" ? Schedule::linear(T, beta_start, beta_end)
                                  : Schedule::cosine(T);
    if (kind != "linear" && kind != "cosine") {
        throw std::invalid_argument("unknown schedule kind: " + kind);
    }
    if (respace_n > 0) s = s.respace(respace_n);
    std::cout << schedule_to_json(s).dump(2) << "\n";
    return kExitOk;
}

int cmd_mask_make(std::size_t h, std::size_t w, const std::string& kind, double acceleration,
                  double center_fraction, std::uint64_t seed, const std::string& out) {
    const double cf =
        center_fraction >= 0.0 ? center_fraction : default_center_fraction(acceleration);
    Mask m = kind == "gaussian" ? make_gaussian_mask_1d(h, w, acceleration, cf, seed)
                                : make_cartesian_mask(h, w, acceleration, cf, seed);
    if (kind != "gaussian" && kind != "cartesian") {
        throw std::invalid_argument("unknown mask kind: " + kind);
    }
    write_mask(out, m);
    std::cout << "{\"columns\": " << m.columns().size() << ", \"out\": \"" << out << "\"}\n";
    return kExitOk;
}

int cmd_reconstruct(const RunConfig& rc) {
    rc.sampler.validate();
    LoadedProblem prob = load_problem(rc);
    const std::size_t h = prob.x_obs.height(), w = prob.x_obs.width();
    const Schedule schedule = build_schedule(rc);
    const DenoiserFactory factory = build_denoiser_factory(rc, h, w);

    ReconResult res = c2f_reconstruct(prob.x_obs, prob.mask, schedule, factory, rc.sampler);

    fs::create_directories(rc.out_dir);
    const fs::path out_dir(rc.out_dir);
    write_cim(out_dir / "mean.cim", res.mean, Domain::Image);
    write_f32_grid(out_dir / "variance.f32", res.variance);
    if (rc.write_png) write_png_magnitude(out_dir / "mean.png", res.mean);
    std::vector<std::string> sample_files;
    if (rc.sampler.keep_samples) {
        fs::create_directories(out_dir / "samples");
        for (std::size_t i = 0; i < res.samples.size(); ++i) {
            const std::string name = "samples/sample_" + std::to_string(i) + ".cim";
            write_cim(out_dir / name, res.samples[i], Domain::Image);
            sample_files.push_back(name);
        }
    }

    const double cons = consistency_error(res.mean, prob.x_obs, prob.mask);
    json report;
    report["schema"] = "ksgdiffuse-report/1";
    report["config"] = config_to_json(rc);
    report["speedup_factor"] = res.speedup_factor;
    report["coarse_steps"] = res.coarse_steps;
    report["timings"] = {{"coarse_seconds", res.coarse_seconds},
                         {"refine_seconds", res.refine_seconds}};
    report["consistency"] = {{"max_error", cons}, {"ok", cons <= 1e-4}};
    if (prob.truth) {
        const MetricReport m = compute_metrics(*prob.truth, res.mean);
        json mj;
        mj["psnr"] = std::isinf(m.psnr) ? json("inf") : json(m.psnr);
        mj["ssim"] = m.ssim;
        mj["data_range"] = m.data_range;
        report["metrics"] = mj;
    }
    json outputs;
    outputs["mean"] = "mean.cim";
    outputs["variance"] = "variance.f32";
    if (!sample_files.empty()) outputs["samples"] = sample_files;
    report["outputs"] = outputs;
    write_json(out_dir / "report.json", report);
    std::cout << report.dump(2) << "\n";
    return kExitOk;
}

int cmd_ablate(const RunConfig& base, const std::string& sweep_path, std::size_t n_seeds,
               std::uint64_t seed_base, const std::string& out_csv) {
    std::ifstream in(sweep_path);
    if (!in) throw IoError("cannot open sweep: " + sweep_path);
    json sweep;
    try {
        in >> sweep;
    } catch (const json::exception& e) {
        throw std::invalid_argument("sweep parse error: " + std::string(e.what()));
    }
    if (!sweep.is_array() || sweep.empty()) {
        throw std::invalid_argument("sweep must be a non-empty JSON array");
    }
    if (n_seeds == 0) throw std::invalid_argument("--seeds must be >= 1");

    LoadedProblem prob = load_problem(base);
    if (!prob.truth) {
        throw std::invalid_argument("ablate requires an image-domain input (ground truth)");
    }
    const std::size_t h = prob.x_obs.height(), w = prob.x_obs.width();
    const Schedule schedule = build_schedule(base);
    const DenoiserFactory factory = build_denoiser_factory(base, h, w);

    std::string csv = "variant,k,N,ksg_noise,refine,seeds,psnr_mean,psnr_std\n";
    for (const json& cell : sweep) {
        SamplerConfig cfg = base.sampler;
        if (cell.contains("k")) cfg.k = cell.at("k").get<std::size_t>();
        if (cell.contains("N")) cfg.N = cell.at("N").get<std::size_t>();
        if (cell.contains("ksg_noise")) cfg.ksg_noise = cell.at("ksg_noise").get<bool>();
        if (cell.contains("refine")) cfg.refine = cell.at("refine").get<bool>();
        if (cell.contains("T_refine")) cfg.T_refine = cell.at("T_refine").get<std::size_t>();
        cfg.keep_samples = false;
        cfg.validate();
        const std::string variant =
            !cfg.ksg_noise ? "nonoise" : (cfg.refine ? "refine" : "norefine");
        std::vector<double> psnrs;
        for (std::size_t s = 0; s < n_seeds; ++s) {
            cfg.seed = seed_base + s;
            ReconResult res = c2f_reconstruct(prob.x_obs, prob.mask, schedule, factory, cfg);
            psnrs.push_back(psnr(*prob.truth, res.mean));
        }
        double mean = 0.0;
        for (double p : psnrs) mean += p;
        mean /= static_cast<double>(psnrs.size());
        double var = 0.0;
        for (double p : psnrs) var += (p - mean) * (p - mean);
        const double stddev =
            psnrs.size() > 1 ? std::sqrt(var / static_cast<double>(psnrs.size() - 1)) : 0.0;
        csv += variant + "," + std::to_string(cfg.k) + "," + std::to_string(cfg.N) + "," +
               (cfg.ksg_noise ? "true" : "false") + "," + (cfg.refine ? "true" : "false") + "," +
               std::to_string(n_seeds) + "," + std::to_string(mean) + "," +
               std::to_string(stddev) + "\n";
    }
    if (out_csv.empty() || out_csv == "-") {
        std::cout << csv;
    } else {
        io_detail::atomic_write(out_csv, csv);
    }
    return kExitOk;
}

int cmd_metrics(const std::string& ref_path, const std::string& test_path,
                double data_range) {
    const CimFile ref = read_cim(ref_path);
    const CimFile test = read_cim(test_path);
    const std::optional<double> dr =
        data_range > 0.0 ? std::optional<double>(data_range) : std::nullopt;
    const MetricReport m =
        compute_metrics(ComplexImage(ref.grid), ComplexImage(test.grid), dr);
    json j;
    j["psnr"] = std::isinf(m.psnr) ? json("inf") : json(m.psnr);
    j["ssim"] = m.ssim;
    j["data_range"] = m.data_range;
    std::cout << j.dump(2) << "\n";
    return kExitOk;
}

int cmd_oracle(const std::string& mu_path, double s2, const std::string& mask_path,
               const std::string& input_path, const std::string& out_dir) {
    const CimFile mu_file = read_cim(mu_path);
    const Mask mask = read_mask(mask_path);
    const CimFile input = read_cim(input_path);
    KSpace x_obs = input.domain == Domain::Kspace
                       ? apply_mask(KSpace(input.grid), mask)
                       : apply_mask(fft2c(ComplexImage(input.grid)), mask);
    const GaussianPosterior post =
        gaussian_posterior(ComplexImage(mu_file.grid), s2, mask, x_obs);
    fs::create_directories(out_dir);
    const fs::path dir(out_dir);
    write_cim(dir / "oracle_mean.cim", post.mean, Domain::Image);
    write_f32_grid(dir / "oracle_kspace_variance.f32", post.kspace_variance);
    std::cout << "{\"mean\": \"oracle_mean.cim\", \"kspace_variance\": "
                 "\"oracle_kspace_variance.f32\"}\n";
    return kExitOk;
}

int cmd_phantom(std::size_t h, std::size_t w, double amplitude, double s2, bool sample,
                std::uint64_t seed, const std::string& out) {
    const ComplexImage mu = smooth_bump(h, w, amplitude);
    const ComplexImage img = sample ? sample_gaussian_phantom(mu, s2, seed) : mu;
    write_cim(out, img, Domain::Image);
    std::cout << "{\"out\": \"" << out << "\"}\n";
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"k-space-guided diffusion reconstruction"};
    app.require_subcommand(1);

    // schedule dump
    auto* sched = app.add_subcommand("schedule", "schedule utilities");
    sched->require_subcommand(1);
    auto* dump = sched->add_subcommand("dump", "emit beta/alpha/abar/sigma2 as JSON");
    std::string sd_kind = "cosine";
    std::size_t sd_T = 4000, sd_respace = 0;
    double sd_bs = 1e-4, sd_be = 0.02;
    dump->add_option("--kind", sd_kind, "cosine|linear")->capture_default_str();
    dump->add_option("--T", sd_T)->capture_default_str();
    dump->add_option("--beta-start", sd_bs)->capture_default_str();
    dump->add_option("--beta-end", sd_be)->capture_default_str();
    dump->add_option("--respace", sd_respace, "re-space to this many steps (0 = off)");

    // mask make
    auto* maskc = app.add_subcommand("mask", "mask utilities");
    maskc->require_subcommand(1);
    auto* mk = maskc->add_subcommand("make", "generate an undersampling mask");
    std::size_t mk_h = 0, mk_w = 0;
    std::string mk_kind = "cartesian", mk_out;
    double mk_acc = 4.0, mk_cf = -1.0;
    std::uint64_t mk_seed = 0;
    mk->add_option("--height", mk_h)->required();
    mk->add_option("--width", mk_w)->required();
    mk->add_option("--kind", mk_kind, "cartesian|gaussian")->capture_default_str();
    mk->add_option("--acceleration", mk_acc)->capture_default_str();
    mk->add_option("--center-fraction", mk_cf, "default depends on acceleration");
    mk->add_option("--seed", mk_seed)->capture_default_str();
    mk->add_option("--out", mk_out)->required();

    // reconstruct
    auto* rec = app.add_subcommand("reconstruct", "coarse-to-fine KSG reconstruction");
    RunConfig rec_rc;
    std::string rec_config;
    add_run_options(rec, rec_rc, rec_config);

    // ablate
    auto* abl = app.add_subcommand("ablate", "sweep sampler variants, emit CSV");
    RunConfig abl_rc;
    std::string abl_config, abl_sweep, abl_out;
    std::size_t abl_seeds = 20;
    std::uint64_t abl_seed_base = 0;
    add_run_options(abl, abl_rc, abl_config);
    abl->add_option("--sweep", abl_sweep, "JSON array of {k,N,ksg_noise,refine} cells")
        ->required();
    abl->add_option("--seeds", abl_seeds, "seeds per cell")->capture_default_str();
    abl->add_option("--seed-base", abl_seed_base)->capture_default_str();
    abl->add_option("--out", abl_out, "CSV path (default stdout)");

    // metrics
    auto* met = app.add_subcommand("metrics", "PSNR/SSIM between two CIM1 images");
    std::string met_ref, met_test;
    double met_dr = -1.0;
    met->add_option("--reference", met_ref)->required();
    met->add_option("--test", met_test)->required();
    met->add_option("--data-range", met_dr, "default: reference max magnitude");

    // oracle
    auto* orc = app.add_subcommand("oracle", "closed-form Gaussian posterior");
    std::string orc_mu, orc_mask, orc_input, orc_out = ".";
    double orc_s2 = 1.0;
    orc->add_option("--mu", orc_mu)->required();
    orc->add_option("--s2", orc_s2)->capture_default_str();
    orc->add_option("--mask", orc_mask)->required();
    orc->add_option("--input", orc_input)->required();
    orc->add_option("--out-dir", orc_out)->capture_default_str();

    // phantom
    auto* pha = app.add_subcommand("phantom", "generate a smooth-bump phantom CIM1");
    std::size_t ph_h = 16, ph_w = 16;
    double ph_amp = 5.0, ph_s2 = 1.0;
    bool ph_sample = false;
    std::uint64_t ph_seed = 0;
    std::string ph_out;
    pha->add_option("--height", ph_h)->capture_default_str();
    pha->add_option("--width", ph_w)->capture_default_str();
    pha->add_option("--amplitude", ph_amp)->capture_default_str();
    pha->add_flag("--sample", ph_sample, "draw y0 ~ N(mu, s2 I) instead of mu itself");
    pha->add_option("--s2", ph_s2)->capture_default_str();
    pha->add_option("--seed", ph_seed)->capture_default_str();
    pha->add_option("--out", ph_out)->required();

    // Apply JSON config (if any) before CLI11 sees explicit flags, so flags win.
    // CLI11 parses after defaults are set; options the user passed overwrite.
    for (int i = 1; i + 1 < argc; ++i) {
        if (std::string(argv[i]) == "--config") {
            try {
                RunConfig* target = nullptr;
                for (int jx = 1; jx < argc; ++jx) {
                    const std::string a = argv[jx];
                    if (a == "reconstruct") target = &rec_rc;
                    if (a == "ablate") target = &abl_rc;
                }
                if (target) apply_json_config(argv[i + 1], *target);
            } catch (const IoError& e) {
                std::cerr << "error: " << e.what() << "\n";
                return kExitIo;
            } catch (const std::exception& e) {
                std::cerr << "error: " << e.what() << "\n";
                return kExitConfig;
            }
            break;
        }
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (dump->parsed()) return cmd_schedule_dump(sd_kind, sd_T, sd_bs, sd_be, sd_respace);
        if (mk->parsed()) return cmd_mask_make(mk_h, mk_w, mk_kind, mk_acc, mk_cf, mk_seed, mk_out);
        if (rec->parsed()) return cmd_reconstruct(rec_rc);
        if (abl->parsed()) return cmd_ablate(abl_rc, abl_sweep, abl_seeds, abl_seed_base, abl_out);
        if (met->parsed()) return cmd_metrics(met_ref, met_test, met_dr);
        if (orc->parsed()) return cmd_oracle(orc_mu, orc_s2, orc_mask, orc_input, orc_out);
        if (pha->parsed()) return cmd_phantom(ph_h, ph_w, ph_amp, ph_s2, ph_sample, ph_seed, ph_out);
        std::cerr << "error: no subcommand\n";
        return kExitConfig;
    } catch (const PluginError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitPlugin;
    } catch (const NumericalError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
}
