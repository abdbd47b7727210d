#include <catch2/catch_amalgamated.hpp>

#include <set>
#include <string>

#include "molalign/chem/scaffold.hpp"
#include "molalign/chem/smiles.hpp"

using namespace molalign;

namespace {

std::string key_of(const char *smiles) {
  return chem::scaffold_key(chem::parse_smiles(smiles));
}

} // namespace

TEST_CASE("acyclic molecules collapse to the empty key", "[scaffold]") {
  CHECK(key_of("C") == "");
  CHECK(key_of("CCO") == "");
  CHECK(key_of("CC(C)CC(=O)O") == "");
  CHECK(key_of("C[C@@H](N)C(=O)O") == "");
  CHECK(key_of("N#N") == "");
}

TEST_CASE("side chains prune down to the ring system", "[scaffold]") {
  std::string benzene = key_of("c1ccccc1");
  REQUIRE(benzene != "");
  CHECK(key_of("Cc1ccccc1") == benzene);
  CHECK(key_of("CCCCc1ccccc1") == benzene);
  CHECK(key_of("Oc1ccccc1") == benzene);
  CHECK(key_of("Nc1ccccc1") == benzene);
  CHECK(key_of("CC(C)Cc1ccc(cc1)C(C)C(=O)O") == benzene); // ibuprofen
}

TEST_CASE("key is invariant under atom renumbering", "[scaffold]") {
  // same molecule written from different starting atoms
  CHECK(key_of("c1ccncc1") == key_of("n1ccccc1"));
  CHECK(key_of("c1ccc2ccccc2c1") == key_of("c2ccc1ccccc1c2"));
  CHECK(key_of("C1CCNCC1") == key_of("N1CCCCC1"));
  CHECK(key_of("c1ccoc1") == key_of("o1cccc1"));
  CHECK(key_of("CC(=O)Oc1ccccc1C(=O)O") == key_of("OC(=O)c1ccccc1OC(C)=O"));
}

TEST_CASE("distinct ring systems get distinct keys", "[scaffold]") {
  std::set<std::string> keys = {
      key_of("c1ccccc1"),       // benzene
      key_of("c1ccncc1"),       // pyridine
      key_of("C1CCCCC1"),       // cyclohexane
      key_of("C1CCCC1"),        // cyclopentane
      key_of("c1ccoc1"),        // furan
      key_of("c1ccsc1"),        // thiophene
      key_of("c1ccc2ccccc2c1"), // naphthalene
      key_of("C1CC1"),          // cyclopropane
  };
  CHECK(keys.size() == 8);
}

TEST_CASE("linkers between rings are part of the scaffold", "[scaffold]") {
  std::string biphenyl = key_of("c1ccc(-c2ccccc2)cc1");
  std::string diphenylmethane = key_of("c1ccc(Cc2ccccc2)cc1");
  std::string two_fragments = key_of("c1ccccc1.c1ccccc1");
  CHECK(biphenyl != diphenylmethane);
  CHECK(biphenyl != two_fragments);
  CHECK(diphenylmethane != two_fragments);
  // the linker itself survives pruning: adding chains elsewhere changes nothing
  CHECK(key_of("Cc1ccc(Cc2ccccc2)cc1") == diphenylmethane);
}

TEST_CASE("exocyclic substituents prune even when doubled", "[scaffold]") {
  // carbonyl oxygen hangs off the ring with degree 1
  std::string cyclohexanone = key_of("O=C1CCCCC1");
  std::string cyclohexane = key_of("C1CCCCC1");
  CHECK(cyclohexanone == cyclohexane);
}

TEST_CASE("fused and bridged systems stay whole", "[scaffold]") {
  CHECK(key_of("C1CC2CCC1CC2") != key_of("C1CCCCC1"));
  CHECK(key_of("Cc1ccc2ccccc2c1") == key_of("c1ccc2ccccc2c1"));
}
