#include <cctype>
#include <string>

#include <gtest/gtest.h>

#include "palmexp/validation.hpp"

using namespace palmexp;

namespace {

class ModuleProperty : public ::testing::TestWithParam<Check> {};

std::string property_name(const ::testing::TestParamInfo<Check>& info) {
    std::string name;
    for (char c : info.param.id) name += std::isalnum(static_cast<unsigned char>(c)) ? c : '_';
    return name;
}

} // namespace

TEST_P(ModuleProperty, Holds) {
    const auto r = run_check(GetParam(), std::nullopt, 1);
    EXPECT_TRUE(r.pass) << format_report_line(r);
}

INSTANTIATE_TEST_SUITE_P(Registry, ModuleProperty, ::testing::ValuesIn(property_checks()), property_name);
