#pragma once

#include <string>
#include <string_view>

namespace ftrans {

// Deterministic Fortran -> Python translation for the corpus subset: scalar
// (optionally elemental) functions and subroutines built from parameters,
// assignments, if/else chains, counted and conditional loops and common
// intrinsics. Elemental procedures are wrapped with np.vectorize. Statements
// outside the subset become a raise of NotImplementedError so the generated
// tests fail instead of passing vacuously.
std::string translate_fortran_to_python(std::string_view fortran);

// Converts a pFUnit test module into a pytest module. Module-level parameters
// become Python constants; each subroutine becomes a test function;
// @assertEqual / @assertTrue / @assertFalse / comparison asserts become
// numpy-based asserts honoring `tolerance=`.
std::string translate_funit_to_pytest(std::string_view pf);

// A pFUnit module with one smoke test per unit header found in `fortran`.
std::string skeleton_funit_tests(std::string_view fortran);

}  // namespace ftrans
