// Writes input files for the command-line tests.
//   hofsurf_fixture cube OUT.obj
//   hofsurf_fixture torus OUT.obj
//   hofsurf_fixture sample MESH N SEED OUT.ply

#include "hofsurf/geometry.hpp"
#include "hofsurf/io.hpp"
#include "hofsurf/sampling.hpp"

#include <cstdlib>
#include <iostream>
#include <string>

int main(int argc, char** argv) {
    using namespace hofsurf;
    const std::string cmd = argc > 1 ? argv[1] : "";
    try {
        if (cmd == "cube" && argc == 3) {
            save_mesh(make_cube(0.5), argv[2], MeshFormat::Obj);
        } else if (cmd == "torus" && argc == 3) {
            save_mesh(make_torus(0.3, 0.12, 24, 12), argv[2], MeshFormat::Obj);
        } else if (cmd == "sample" && argc == 6) {
            const TriangleMesh mesh = load_mesh(argv[2]);
            save_oriented_cloud(sample_mesh_uniform(mesh, std::stoul(argv[3]), std::stoull(argv[4])),
                                argv[5]);
        } else {
            std::cerr << "usage: hofsurf_fixture cube|torus OUT | sample MESH N SEED OUT\n";
            return 2;
        }
    } catch (const std::exception& e) {
        std::cerr << e.what() << '\n';
        return 1;
    }
    return 0;
}
