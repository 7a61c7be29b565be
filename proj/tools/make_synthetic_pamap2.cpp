// Writes a PAMAP2-format synthetic protocol directory for demos and tests.
#include "harbench/synthetic.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"Generate synthetic PAMAP2-format subject files"};
    std::string dir;
    harbench::SyntheticOptions options;
    app.add_option("dir", dir, "output directory")->required();
    app.add_option("--seconds", options.seconds_per_activity, "seconds per activity");
    app.add_option("--seed", options.seed, "generator seed");
    CLI11_PARSE(app, argc, argv);
    try {
        harbench::write_synthetic_dataset(dir, options);
    } catch (const std::exception& e) {
        std::cerr << "make_synthetic_pamap2: " << e.what() << '\n';
        return 2;
    }
    std::cout << "wrote " << options.subjects.size() << " subject files to " << dir << '\n';
    return 0;
}
