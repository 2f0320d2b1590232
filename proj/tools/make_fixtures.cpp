// Regenerates the bundled JSON fixtures under data/.
#include <iostream>
#include <string>

#include "lmdp/fixtures.hpp"
#include "lmdp/io.hpp"

int main(int argc, char** argv) {
  using namespace lmdp;
  const std::string dir = argc > 1 ? argv[1] : LMDP_DATA_DIR;
  try {
    write_json(dir + "/tiny_mdp.json", model_to_json(tiny_mdp_fixture()));
    write_json(dir + "/mixed_m2.json", model_to_json(mixed_m2_fixture()));
    write_json(dir + "/mixed_m2_class.json", class_to_json(mixed_m2_class()));
    const HardFixture hf = hard_m8_fixture();
    write_json(dir + "/hard_m8.json", model_to_json(hf.hard));
    write_json(dir + "/hard_m8_reference.json", model_to_json(hf.reference));
    write_json(dir + "/hard_m8_certificate.json", certificate_to_json(hf.spec, hf.assignment));
  } catch (const std::exception& e) {
    std::cerr << "make_fixtures: " << e.what() << '\n';
    return 1;
  }
  std::cout << "wrote fixtures to " << dir << '\n';
  return 0;
}
