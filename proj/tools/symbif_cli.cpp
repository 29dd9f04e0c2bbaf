// Batch front-end: find / continue / validate pipelines driven by flat
// config files, plus a pure replay verifier for certificate files.
//
// Exit codes: 0 success / verified, 1 numeric failure, 2 config error,
// 3 not-verified result, 4 tampered or inconsistent certificate.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "symbif/certificate.hpp"
#include "symbif/config.hpp"
#include "symbif/systems.hpp"

using namespace symbif;

namespace {

constexpr int exit_ok = 0, exit_numeric = 1, exit_config = 2, exit_not_verified = 3,
              exit_tampered = 4;

std::string read_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw config_error("cannot open '" + path + "'");
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream os(path);
    os << content;
    if (!os) throw std::runtime_error("cannot write '" + path.string() + "'");
}

template <class P>
cert_header make_header(const run_config& cfg) {
    cert_header h;
    h.generated = timestamp_now();
    h.backend = P::name();
    h.config_hash = config_hash(cfg);
    return h;
}

std::string resolve_precision(const run_config& cfg, const std::string& flag) {
    std::string p = flag;
    if (p.empty())
        if (const char* env = std::getenv("SYMBIF_PRECISION")) p = env;
    if (p.empty()) p = cfg.str_or("precision", "double");
    if (p != "double" && p != "extended")
        throw config_error("precision must be 'double' or 'extended'");
    return p;
}

template <class P>
poincare_family<P> make_fs_family(const run_config& cfg, double default_tol) {
    poincare_family<P> fam;
    fam.field = fs_field();
    fam.sec = section::coordinate(3, 2);
    fam.split.p1 = 1;
    fam.split.q1 = 0;
    fam.params = ivec<P>{interval<P>(0.0)};
    fam.nu_param = 0;
    fam.opt.tol = cfg.number_or("odeint_tol", default_tol);
    fam.opt.order = cfg.integer_or("odeint_order", fam.opt.order);
    return fam;
}

// CR3BP half-return family on the section y = 0 for the symmetry-breaking
// setup: p0 = yd (energy direction), p1 = z, p2 = x, q1 = zd, q2 = xd
template <class P>
poincare_family<P> make_cr3bp_family(const run_config& cfg, double default_tol) {
    poincare_family<P> fam;
    fam.field = cr3bp_field();
    fam.sec = section::coordinate(6, 1);
    fam.split.p0 = 4;
    fam.split.p1 = 2;
    fam.split.p2 = {0};
    fam.split.q1 = 5;
    fam.split.q2 = {3};
    fam.params = ivec<P>{cfg.box<P>("mu")};
    fam.nu_param = -1;
    fam.opt.tol = cfg.number_or("odeint_tol", default_tol);
    fam.t_max = cfg.number_or("t_max", 4.0);
    return fam;
}

// ------------------------------------------------------------------- find

int cmd_find(const run_config& cfg, const std::string& out_dir,
             const std::string& precision) {
    std::filesystem::create_directories(out_dir);
    const std::string system = cfg.str("system");
    int converged = 0;

    if (system == "falkner-skan") {
        auto fam = make_fs_family<b64>(cfg, 1e-12);
        auto seeds = resonance_scan<b64>(fam, cfg.number("nu_lo"), cfg.number("nu_hi"),
                                         cfg.integer_or("samples", 40), cfg.int_list("k_list"),
                                         ivec<b64>{di(cfg.number_or("seed_p1", 0.9397))});
        std::printf("scan: %zu candidate seed(s)\n", seeds.size());
        for (auto& s : seeds) {
            try {
                finder_options coarse;
                coarse.tol = 1e-3;
                auto r1 = refine_bifurcation_point<b64>(fam, s.k, 0, 0, s.nu, s.p, coarse);
                auto path = std::filesystem::path(out_dir) /
                            ("seed_fs_k" + std::to_string(s.k) + ".cert");
                if (precision == "extended") {
                    // extended re-polish: the binary64 stage is limited by
                    // roundoff bias in the enclosure midpoints
                    auto fx = make_fs_family<extp>(cfg, cfg.number_or("odeint_tol", 1e-26));
                    finder_options fo;
                    fo.tol = cfg.number_or("tol", 1e-12);
                    auto r2 = refine_bifurcation_point<extp>(
                        fx, s.k, 0, 0, interval<extp>(r1.nu.mid()),
                        ivec<extp>{interval<extp>(r1.p[0].mid())}, fo);
                    write_file(path, print_certificate_file(make_header<extp>(cfg),
                                                            print_seed_body(r2, system)));
                    std::printf("k=%d refined to nu=%s (extended)\n", s.k,
                                extp::print_down(r2.nu.mid()).substr(0, 24).c_str());
                } else {
                    write_file(path, print_certificate_file(make_header<b64>(cfg),
                                                            print_seed_body(r1, system)));
                    std::printf("k=%d refined to nu=%.17g\n", s.k, r1.nu.mid());
                }
                ++converged;
            } catch (const max_iterations& e) {
                std::printf("k=%d seed did not converge: %s\n", s.k, e.what());
            } catch (const singular_iteration_matrix& e) {
                std::printf("k=%d seed failed: %s\n", s.k, e.what());
            }
        }
    } else if (system == "cr3bp") {
        auto field = cr3bp_field();
        auto sec = section::coordinate(6, 1);
        try {
            auto s = find_symmetry_breaking<b64>(
                field, sec, ivec<b64>{cfg.box<b64>("mu")}, cfg.box<b64>("seed_x"),
                cfg.box<b64>("seed_yd"), {}, {}, {}, cfg.number_or("t_max", 4.0));
            double C = jacobi<b64>(cfg.box<b64>("mu"),
                                   ivec<b64>{s.nu, di(0.0), di(0.0), di(0.0), s.p[0], di(0.0)})
                           .mid();
            std::printf("symmetry-breaking point: x=%.12f yd=%.12f C=%.8f\n", s.nu.mid(),
                        s.p[0].mid(), C);
            write_file(std::filesystem::path(out_dir) / "seed_cr3bp_sb.cert",
                       print_certificate_file(make_header<b64>(cfg),
                                              print_seed_body(s, system)));
            ++converged;
        } catch (const max_iterations& e) {
            std::printf("seed did not converge: %s\n", e.what());
        }
    } else {
        throw config_error("unknown system '" + system + "'");
    }
    return converged > 0 ? exit_ok : exit_numeric;
}

// --------------------------------------------------------------- continue

int cmd_continue(const run_config& cfg, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    if (cfg.str("system") != "falkner-skan")
        throw config_error("continue supports system = falkner-skan");
    auto fam = make_fs_family<b64>(cfg, 1e-12);
    double za = cfg.number("nu_lo"), zb = cfg.number("nu_hi");

    // nonrigorous seed path: pointwise Newton on a sample grid, interpolated
    const int ns = std::max(2, cfg.integer_or("samples", 101));
    auto ys = std::vector<double>(std::size_t(ns));
    {
        finder_options fo;
        ivec<b64> p{di(cfg.number_or("seed_p1", 0.9397))};
        for (int i = 0; i < ns; ++i) {
            double nu = za + (zb - za) * double(i) / (ns - 1);
            p = detail::point_branch<b64>(fam, 1, 1, di(nu), p, fo);
            ys[std::size_t(i)] = p[0].mid();
        }
    }
    auto seed = [&](double z) {
        double t = (z - za) / (zb - za) * (ns - 1);
        int i = std::clamp(int(t), 0, ns - 2);
        double y = ys[std::size_t(i)] + (t - i) * (ys[std::size_t(i + 1)] - ys[std::size_t(i)]);
        return std::vector<double>{y};
    };

    auto fn = detail::family_fn<b64>(fam, 1, 1, 1); // pi_q of the half map
    continuation_options copt;
    copt.initial_width = cfg.number_or("initial_width", 0.25);
    copt.min_width = cfg.number_or("min_width", 1e-6);
    copt.threads = cfg.integer_or("workers", int(std::thread::hardware_concurrency()));

    try {
        auto br = continue_branch<b64>(fn, seed, za, zb, copt);
        bool glued = !br.segments.empty();
        for (bool g : br.glue) glued = glued && g;
        std::printf("branch: %zu segment(s), glue %s\n", br.segments.size(),
                    glued ? "ok" : "FAILED");

        write_file(std::filesystem::path(out_dir) / "branch.cert",
                   print_certificate_file(make_header<b64>(cfg),
                                          print_branch_body(br, di(za, zb))));
        std::ostringstream csv;
        csv << "param_lo,param_hi,p1_lo,p1_hi\r\n";
        for (const auto& s : br.segments) {
            char line[160];
            std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g,%.17g\r\n",
                          b64::to_double(s.Z[0].lo()), b64::to_double(s.Z[0].hi()),
                          b64::to_double(s.X[0].lo()), b64::to_double(s.X[0].hi()));
            csv << line;
        }
        write_file(std::filesystem::path(out_dir) / "branch.csv", csv.str());
        return glued ? exit_ok : exit_not_verified;
    } catch (const stalled_at_parameter& e) {
        std::printf("%s at parameter %.17g\n", e.what(), e.where);
        return exit_numeric;
    }
}

// --------------------------------------------------------------- validate

template <class P>
int validate_fs(const run_config& cfg, const std::string& out_dir) {
    using I = interval<P>;
    auto fam = make_fs_family<P>(cfg, std::is_same_v<P, b64> ? 1e-12 : 1e-30);
    I bh = cfg.box<P>("seed_nu");
    I yh = cfg.box<P>("seed_p1");
    int k = cfg.integer("k");

    bif_context<P, poincare_family<P>> ctx{fam};
    ctx.k = k;
    ctx.J = bh.inflated(cfg.number_or("box_j_radius", 1e-9));
    ctx.P1 = yh.inflated(cfg.number_or("box_p1_radius", 1e-13));
    ctx.t_subdiv = cfg.integer_or("t_subdiv", 1);

    auto br = validate_fixed_point_branch(ctx, bh, ivec<P>{yh}, ivec<P>(0), false,
                                          std::optional<ivec<P>>(ivec<P>{yh.inflated(1e-8)}));
    bif_certificate<P> cert;
    if (br.status != newton_status::unique_zero) {
        std::printf("fixed-point branch not validated\n");
        cert.type = k % 2 == 0 ? bif_type::period_tupling : bif_type::touch_and_go;
        cert.k = k;
        cert.J = ctx.J;
        cert.P1 = ctx.P1;
        cert.conditions.push_back(check_C2(ctx));
    } else {
        ls_reduce(ctx, bh, yh, ivec<P>(0));
        bool pp = cfg.flag_or("principal_period", true);
        std::string type = cfg.str_or("type", k % 2 == 0 ? "tupling" : "touch-and-go");
        if (type == "tupling")
            cert = validate_tupling(ctx, bh, param_kind::external_parameter, pp);
        else if (type == "touch-and-go")
            cert = validate_touch_and_go(ctx, bh, param_kind::external_parameter, pp);
        else
            throw config_error("unknown type '" + type + "' for falkner-skan");
    }
    for (const auto& c : cert.conditions)
        std::printf("%-8s %s\n", c.tag.c_str(), c.verified ? "verified" : "NOT verified");
    std::printf("certificate: %s\n", cert.verified() ? "verified" : "not verified");
    write_file(std::filesystem::path(out_dir) / "certificate.cert",
               print_certificate_file(make_header<P>(cfg), print_certificate_body(cert)));
    return cert.verified() ? exit_ok : exit_not_verified;
}

template <class P>
int validate_cr3bp_sb(const run_config& cfg, const std::string& out_dir) {
    using I = interval<P>;
    auto fam = make_cr3bp_family<P>(cfg, std::is_same_v<P, b64> ? 1e-12 : 1e-26);
    I x0 = cfg.box<P>("seed_x");
    I yd0 = cfg.box<P>("seed_yd");

    bif_context<P, poincare_family<P>> ctx{fam};
    ctx.k = 1;
    ctx.np2 = 1;
    ctx.nq2 = 1;
    ctx.J = yd0.inflated(cfg.number_or("box_j_radius", 1e-6));
    ctx.P1 = I(0.0).inflated(cfg.number_or("box_p1_radius", 1e-6));
    ctx.P2 = ivec<P>{x0.inflated(cfg.number_or("box_j_radius", 1e-6))};
    ctx.t_subdiv = cfg.integer_or("t_subdiv", 1);

    auto br = validate_fixed_point_branch(ctx, yd0, ivec<P>{I(0.0), x0}, ivec<P>(0), true);
    bif_certificate<P> cert;
    cert.type = bif_type::symmetry_breaking;
    cert.k = 1;
    cert.kind = param_kind::hamiltonian_energy;
    cert.J = ctx.J;
    cert.P1 = ctx.P1;
    cert.P2 = ctx.P2;
    if (br.status != newton_status::unique_zero) {
        std::printf("double-symmetric fixed-point branch not validated\n");
        cert.conditions.push_back(check_C2(ctx));
    } else {
        ls_reduce(ctx, yd0, I(0.0), ivec<P>{x0});
        const signed_perm* R = fam.field.symmetry("R");
        const signed_perm* S = fam.field.symmetry("S");
        cert = validate_symmetry_breaking(ctx, yd0, *R, *S, param_kind::hamiltonian_energy);

        // Hamiltonian-side conditions: H = Jacobi constant on the slice
        const program& H = *fam.field.first_integral;
        I mu = fam.params[0];
        auto ham = [&](const I& p0, const I& p1, const ivec<P>& p2, int degree) {
            using Jt = jet<I>;
            std::vector<Jt> st(6, Jt(3, degree, I(0.0)));
            st[0] = Jt::variable(3, degree, 2, p2[0]); // x
            st[2] = Jt::variable(3, degree, 1, p1);    // z
            st[4] = Jt::variable(3, degree, 0, p0);    // yd
            std::vector<Jt> pj{Jt(3, degree, mu)};
            return eval_program<Jt>(H, st, pj)[0];
        };
        for (auto& rec : hamiltonian_checks(ctx, ham, hamiltonian_theorem::slope))
            cert.conditions.push_back(std::move(rec));
    }
    for (const auto& c : cert.conditions)
        std::printf("%-12s %s\n", c.tag.c_str(), c.verified ? "verified" : "NOT verified");
    std::printf("certificate: %s\n", cert.verified() ? "verified" : "not verified");
    write_file(std::filesystem::path(out_dir) / "certificate.cert",
               print_certificate_file(make_header<P>(cfg), print_certificate_body(cert)));
    return cert.verified() ? exit_ok : exit_not_verified;
}

int cmd_validate(const run_config& cfg, const std::string& out_dir,
                 const std::string& precision) {
    std::filesystem::create_directories(out_dir);
    const std::string system = cfg.str("system");
    if (system == "falkner-skan")
        return precision == "extended" ? validate_fs<extp>(cfg, out_dir)
                                       : validate_fs<b64>(cfg, out_dir);
    if (system == "cr3bp") {
        if (cfg.str_or("type", "symmetry-breaking") != "symmetry-breaking")
            throw config_error("cr3bp validation supports type = symmetry-breaking");
        return precision == "extended" ? validate_cr3bp_sb<extp>(cfg, out_dir)
                                       : validate_cr3bp_sb<b64>(cfg, out_dir);
    }
    throw config_error("unknown system '" + system + "'");
}

// ----------------------------------------------------------------- verify

int cmd_verify(const std::string& path) {
    std::string text;
    try {
        text = read_file(path);
    } catch (const std::exception& e) {
        std::printf("%s\n", e.what());
        return exit_tampered;
    }
    try {
        auto f = parse_certificate_file(text);
        auto r = replay_file(f);
        if (!r.consistent) {
            std::printf("inconsistent certificate: %s\n", r.detail.c_str());
            return exit_tampered;
        }
        std::printf("certificate replays: %s\n", r.verified ? "verified" : "not verified");
        return exit_ok;
    } catch (const certificate_parse_error& e) {
        std::printf("parse error: %s\n", e.what());
        return exit_tampered;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"symbif: validated bifurcation analysis of reversible ODEs"};
    app.require_subcommand(1);

    std::string config_path, out_dir = ".", precision_flag, cert_path;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "run configuration file")->required();
        sub->add_option("--out", out_dir, "output directory");
        sub->add_option("--precision", precision_flag, "double | extended");
    };
    auto* find_cmd = app.add_subcommand("find", "locate approximate bifurcation points");
    add_common(find_cmd);
    auto* cont_cmd = app.add_subcommand("continue", "certify a fixed-point branch");
    add_common(cont_cmd);
    auto* val_cmd = app.add_subcommand("validate", "run a full condition suite");
    add_common(val_cmd);
    auto* ver_cmd = app.add_subcommand("verify", "replay a certificate file");
    ver_cmd->add_option("file", cert_path, "certificate file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (ver_cmd->parsed()) return cmd_verify(cert_path);
        run_config cfg = run_config::parse(read_file(config_path));
        std::string precision = resolve_precision(cfg, precision_flag);
        if (find_cmd->parsed()) return cmd_find(cfg, out_dir, precision);
        if (cont_cmd->parsed()) return cmd_continue(cfg, out_dir);
        return cmd_validate(cfg, out_dir, precision);
    } catch (const config_error& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return exit_config;
    } catch (const validation_failed& e) {
        std::fprintf(stderr, "numeric failure: %s\n", e.what());
        return exit_numeric;
    } catch (const invalid_interval& e) {
        std::fprintf(stderr, "numeric failure: %s\n", e.what());
        return exit_numeric;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return exit_numeric;
    }
}
