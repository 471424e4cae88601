#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "helpers.hpp"
#include "imgk/csv_io.hpp"
#include "imgk/synth.hpp"

using namespace imgk;
using imgk::testing::TempDir;

TEST_SUITE("synth") {

TEST_CASE("mixture shape, labels and separation") {
    synth::MixtureSpec spec;
    spec.k_true = 5;
    spec.points_per_component = 30;
    spec.dim = 100;
    spec.center_scale = 8.0;
    spec.seed = 1;
    const auto m = synth::gen_mixture(spec);
    CHECK(m.points.rows() == 150);
    CHECK(m.points.cols() == 100);
    CHECK(m.centers.rows() == 5);
    CHECK(spec.separation_ratio() == 8.0);
    for (int i = 0; i < 5; ++i) {
        CHECK(m.centers.row(i).norm() <= 8.0 + 1e-12);
        for (int j = 0; j < i; ++j) CHECK((m.centers.row(i) - m.centers.row(j)).norm() >= 6.0);
    }
    for (int c = 0; c < 5; ++c) CHECK(std::count(m.labels.begin(), m.labels.end(), c) == 30);
}

TEST_CASE("generators are pure functions of their seed") {
    synth::MixtureSpec spec;
    spec.seed = 9;
    CHECK(synth::gen_mixture(spec).points == synth::gen_mixture(spec).points);
    auto other = spec;
    other.seed = 10;
    CHECK(synth::gen_mixture(spec).points != synth::gen_mixture(other).points);

    synth::PanelSpec p;
    p.seed = 3;
    const auto a = synth::gen_panel(p);
    const auto b = synth::gen_panel(p);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].purchase == b[i].purchase);
        CHECK(a[i].decision_time == b[i].decision_time);
    }
}

TEST_CASE("impossible separation is reported") {
    synth::MixtureSpec spec;
    spec.k_true = 50;
    spec.dim = 1;
    spec.center_scale = 2.0;
    spec.max_attempts = 50;
    CHECK_THROWS_AS(synth::gen_mixture(spec), synth::SynthError);
}

TEST_CASE("image sets split pooled rows into images") {
    synth::ImageSetSpec spec;
    spec.mixture.k_true = 6;
    spec.mixture.dim = 16;
    spec.mixture.center_scale = 30.0;
    spec.n_images = 3;
    spec.patches_per_image = 50;
    spec.set_id = "demo";
    const auto s = synth::gen_image_set(spec);
    REQUIRE(s.images.size() == 3);
    CHECK(s.manifest.set_id == "demo");
    CHECK(s.manifest.image_ids == std::vector<std::string>{"demo_img1", "demo_img2", "demo_img3"});
    CHECK(s.labels.size() == 150);
    for (int c = 0; c < 6; ++c) CHECK(std::count(s.labels.begin(), s.labels.end(), c) == 25);
    for (const auto& img : s.images) {
        CHECK(img.num_patches() == 50);
        CHECK(img.width() == 16);
        CHECK_NOTHROW(validate_embeddings(img));
    }
}

TEST_CASE("panel has the 996 x 10 shape by default") {
    synth::PanelSpec spec;
    spec.seed = 2;
    const auto rows = synth::gen_panel(spec);
    CHECK(rows.size() == 9960);
    std::set<std::string> users, brands, products;
    for (const auto& r : rows) {
        users.insert(r.participant_id);
        brands.insert(r.brand_id);
        products.insert(r.product_id);
        CHECK(r.k >= 50);
        CHECK(r.k <= 500);
        CHECK(r.n_images >= 1);
        CHECK(r.n_images <= 5);
        CHECK(r.decision_time > 0);
    }
    CHECK(users.size() == 996);
    CHECK(brands.size() <= 6);
    CHECK(products.size() <= 100);
}

TEST_CASE("choice data share of y = 1 follows the index") {
    synth::ChoiceSpec spec;
    spec.beta = {3.0, 0.0};
    spec.n = 4000;
    spec.seed = 5;
    const auto rows = synth::gen_choice_data(spec);
    CHECK(rows.size() == 4000);
    double ones = 0;
    for (const auto& r : rows) ones += r.y;
    CHECK(ones / 4000.0 == doctest::Approx(1.0 / (1.0 + std::exp(-3.0))).epsilon(0.02));
    CHECK(rows[0].x1.size() == 9);
}

}

TEST_SUITE("csv_io") {

TEST_CASE("exp1 and exp2 files round trip") {
    TempDir dir("csv");
    synth::ChoiceSpec cs;
    cs.n = 25;
    cs.seed = 1;
    auto choice = synth::gen_choice_data(cs);
    choice[2].x2[4] = std::nan("");
    write_exp1_csv(choice, dir / "exp1.csv");
    const auto c2 = read_exp1_csv(dir / "exp1.csv");
    REQUIRE(c2.size() == 25);
    CHECK(c2[5].k1 == choice[5].k1);
    CHECK(c2[5].x1 == choice[5].x1);
    CHECK(std::isnan(c2[2].x2[4]));

    synth::PanelSpec ps;
    ps.n_users = 5;
    auto panel = synth::gen_panel(ps);
    write_exp2_csv(panel, dir / "exp2.csv");
    const auto p2 = read_exp2_csv(dir / "exp2.csv");
    REQUIRE(p2.size() == panel.size());
    CHECK(p2[7].decision_time == panel[7].decision_time);
    CHECK(p2[7].brand_id == panel[7].brand_id);
    CHECK(p2[7].n_images == panel[7].n_images);
}

TEST_CASE("schema errors name the column") {
    TempDir dir("csv-bad");
    {
        std::ofstream out(dir / "bad.csv");
        out << "participant_id,product_id,brand_id,set_id,purchase,decision_time_s,k,n_images\n"
               "u1,p1,b1,s1,1,3.5,120,2\n";
    }
    try {
        read_exp2_csv(dir / "bad.csv");
        FAIL("expected SchemaError");
    } catch (const SchemaError& e) {
        CHECK(e.column() == "price");
        CHECK(std::string(e.what()).find("price") != std::string::npos);
    }
    {
        std::ofstream out(dir / "bad2.csv");
        out << "participant_id,product_id,brand_id,set_id,purchase,decision_time_s,k,price,n_images\n"
               "u1,p1,b1,s1,1,3.5,abc,100,2\n";
    }
    try {
        read_exp2_csv(dir / "bad2.csv");
        FAIL("expected SchemaError");
    } catch (const SchemaError& e) {
        CHECK(e.column() == "k");
    }
}

TEST_CASE("column lists") {
    CHECK(exp1_columns().size() == 5 + 18);
    CHECK(exp1_columns()[5] == "x1_brightness");
    CHECK(exp1_columns().back() == "x2_purity");
    CHECK(exp2_columns()[5] == "decision_time_s");
}

}
