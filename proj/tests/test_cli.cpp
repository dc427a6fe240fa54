#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

TEST_CASE("suite not yet written") { FAIL("suite not yet written"); }
