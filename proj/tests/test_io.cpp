#include "doctest.h"

#include "mlat/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

using namespace mlat;

TEST_CASE("every preset loads")
{
    for (const auto& name : preset_names()) {
        CAPTURE(name);
        const Crystal c = preset(name);
        CHECK(c.name == name);
        CHECK(c.spec.F.determinant() == doctest::Approx(1.0));
        if (!c.allow_unstable) {
            CHECK_FALSE(c.defect.empty());
        }
    }
    CHECK_THROWS_AS(preset("nonesuch"), ValidationError);
}

TEST_CASE("malformed documents raise validation errors")
{
    json doc = preset_document("square1");
    doc.erase("F");
    CHECK_THROWS_AS(load_crystal(doc), ValidationError);
    doc = preset_document("square1");
    doc["F"] = {{1, 0}, {0, -1}};
    CHECK_THROWS_AS(load_crystal(doc), ValidationError);
    doc = preset_document("square1");
    doc["n"] = 5;
    CHECK_THROWS_AS(load_crystal(doc), ValidationError);
    doc = preset_document("square1");
    doc["defect"]["dipoles"][0]["site"] = {9, 9};
    CHECK_THROWS_AS(load_crystal(doc), ValidationError);
}

TEST_CASE("crystal resolution: file, then preset name")
{
    const auto tmp = std::filesystem::temp_directory_path() / "mlat_io_test_crystal.json";
    json doc = preset_document("square1");
    doc["name"] = "from-file";
    std::ofstream(tmp) << doc.dump();
    CHECK(resolve_crystal(tmp.string()).name == "from-file");
    std::filesystem::remove(tmp);
    CHECK(resolve_crystal("hex2d").name == "hex2d");
    CHECK(resolve_crystal("hex2d.json").name == "hex2d");
    CHECK_THROWS_AS(resolve_crystal("no/such/hex2d.json"), ValidationError);
    CHECK_THROWS_AS(resolve_crystal("missing.json"), ValidationError);
}

TEST_CASE("binary field round trip")
{
    const Crystal c = preset("hex2d");
    const auto w = LatticeWindow::ball(c.spec, c.range.range, 5.0);
    DisplacementField u(w, 2, c.spec.n);
    u.values.setRandom();
    const auto tmp = std::filesystem::temp_directory_path() / "mlat_io_test_field.bin";
    write_field_binary(tmp.string(), u);
    const LoadedField back = read_field_binary(tmp.string());
    std::filesystem::remove(tmp);
    CHECK((back.spec.F - c.spec.F).norm() < 1e-15);
    REQUIRE(back.u.sites() == u.sites());
    for (int i = 0; i < u.sites(); ++i) {
        const int j = *back.u.window().index_of(w->site(i));
        for (int a = 0; a < 2; ++a) {
            CHECK((back.u.at(j, a) - u.at(i, a)).norm() == 0.0);
        }
        CHECK(back.u.window().is_free(j) == w->is_free(i));
    }
    CHECK_THROWS_AS(read_field_binary("/nonexistent/field.bin"), ValidationError);
}
