#include "doctest.h"

TEST_CASE("placeholder rs_lab") { CHECK(true); }
