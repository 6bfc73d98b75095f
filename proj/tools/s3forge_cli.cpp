// Command-line front end: generate / analyze / preset / list-presets.
//
// Exit codes: 0 success; 2 the mesh was produced but fails validation
// (non-watertight or a feature thinner than 1 mm); 3 the design touches the
// projection pole; 4 the scene file is malformed or semantically invalid;
// 5 a file could not be read or written.
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <s3forge/scene.hpp>

namespace {

void swap_extension(std::string& path, const std::string& ext) {
    std::size_t slash = path.find_last_of('/');
    std::size_t dot = path.find_last_of('.');
    if (dot == std::string::npos || (slash != std::string::npos && dot < slash))
        path += "." + ext;
    else
        path = path.substr(0, dot + 1) + ext;
}

int run_command(bool do_analyze, s3forge::Scene sc, const std::string& format_override,
                double weld_tol) {
    if (!format_override.empty()) {
        sc.format = format_override;
        swap_extension(sc.out_path, format_override);
    }
    if (do_analyze) {
        std::cout << s3forge::analyze(sc).dump(2) << "\n";
        return 0;
    }
    s3forge::RunResult res = s3forge::run(sc, weld_tol);
    std::cout << res.diag.to_json();
    if (!res.diag.all_watertight()) {
        std::cerr << "validation failed: mesh is not watertight\n";
        return 2;
    }
    if (res.diag.min_feature_mm < 1.0) {
        std::cerr << "validation failed: thinnest feature " << res.diag.min_feature_mm
                  << " mm is below the 1 mm floor\n";
        return 2;
    }
    std::cerr << "wrote " << res.mesh_path << " and " << res.diag_path << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"stereographic print pipeline for designs living on the 3-sphere"};
    app.require_subcommand(1);

    std::string scene_path, preset_name, out_override, format_override;
    double weld_tol = 0.0;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--format", format_override, "override output format")
            ->check(CLI::IsMember({"stl", "obj"}));
        cmd->add_option("--seed-tolerance", weld_tol,
                        "vertex weld tolerance in projection units (before scaling)")
            ->check(CLI::NonNegativeNumber);
    };

    CLI::App* gen = app.add_subcommand("generate", "mesh a scene file and write mesh + diagnostics");
    gen->add_option("scene", scene_path, "scene JSON file")->required();
    add_common(gen);

    CLI::App* ana = app.add_subcommand("analyze", "report printability numbers without meshing");
    ana->add_option("scene", scene_path, "scene JSON file")->required();

    CLI::App* pre = app.add_subcommand("preset", "run one of the built-in scenes");
    pre->add_option("name", preset_name, "preset name (see list-presets)")->required();
    pre->add_option("--out", out_override, "output path override");
    add_common(pre);

    app.add_subcommand("list-presets", "list the built-in scenes");

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand("list-presets")) {
            std::cout << s3forge::list_presets();
            return 0;
        }
        s3forge::Scene sc;
        if (app.got_subcommand("preset")) {
            sc = s3forge::preset_scene(preset_name);
            if (!out_override.empty()) sc.out_path = out_override;
        } else {
            sc = s3forge::load_scene(scene_path);
        }
        return run_command(app.got_subcommand("analyze"), std::move(sc), format_override,
                           weld_tol);
    } catch (const s3forge::PoleCollision& e) {
        std::cerr << e.what() << "\n";
        return 3;
    } catch (const s3forge::AtPole& e) {
        std::cerr << e.what() << "\n";
        return 3;
    } catch (const s3forge::SchemaError& e) {
        std::cerr << e.what() << "\n";
        return 4;
    } catch (const s3forge::IoFailure& e) {
        std::cerr << e.what() << "\n";
        return 5;
    } catch (const s3forge::Error& e) {
        std::cerr << "invalid scene: " << e.what() << "\n";
        return 4;
    }
}
