#include <catch2/catch_amalgamated.hpp>

#include "darkscan/model.hpp"

#include "support/builders.hpp"

using namespace darkscan;
namespace ts = testing_support;

namespace {

PageSnapshot chain_snapshot(const std::vector<double>& opacities) {
    // e0 is the root; e{i} is the child of e{i-1}.
    std::vector<ElementNode> elements;
    for (std::size_t i = 0; i < opacities.size(); ++i) {
        StyleInfo st;
        st.opacity = opacities[i];
        std::optional<std::string> parent;
        if (i > 0) parent = "e" + std::to_string(i - 1);
        elements.push_back(ts::element("e" + std::to_string(i), {0, 0, 100, 100}, st, parent));
    }
    return ts::snapshot("s0", std::move(elements));
}

}  // namespace

TEST_CASE("effective_opacity multiplies along the parent chain") {
    CHECK(effective_opacity("e1", chain_snapshot({1.0, 1.0})) == 1.0);
    CHECK(effective_opacity("e1", chain_snapshot({0.5, 0.5})) == Catch::Approx(0.25));
    CHECK(effective_opacity("e2", chain_snapshot({0.5, 0.5, 0.5})) == Catch::Approx(0.125));
}

TEST_CASE("effective_opacity is zero under a hidden subtree") {
    auto snap = chain_snapshot({1.0, 1.0, 0.9});
    snap.elements[0].style.display = Display::None;
    CHECK(effective_opacity("e2", snap) == 0.0);

    snap.elements[0].style.display = Display::Hidden;
    CHECK(effective_opacity("e2", snap) == 0.0);

    snap.elements[0].style.display = Display::Visible;
    snap.elements[2].style.display = Display::None;
    CHECK(effective_opacity("e2", snap) == 0.0);
}

TEST_CASE("effective_opacity errors") {
    auto snap = chain_snapshot({1.0, 1.0});
    CHECK_THROWS_AS(effective_opacity("missing", snap), NotFoundError);

    // Two-element parent cycle.
    snap.elements[0].parent_id = "e1";
    CHECK_THROWS_AS(effective_opacity("e1", snap), MalformedSnapshotError);
}

TEST_CASE("effective_opacity is monotone non-increasing along path extensions") {
    ts::Rng rng(2024);
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<double> opacities;
        const int depth = rng.int_range(1, 8);
        for (int i = 0; i < depth; ++i) opacities.push_back(rng.unit());
        auto snap = chain_snapshot(opacities);
        double prev = 1.0;
        for (int i = 0; i < depth; ++i) {
            const double eo = effective_opacity("e" + std::to_string(i), snap);
            REQUIRE(eo >= 0.0);
            REQUIRE(eo <= 1.0);
            REQUIRE(eo <= prev + 1e-12);
            prev = eo;
        }
    }
}

namespace {

// Independent rectangle-intersection oracle.
bool intersects_positive(const Box& b, double w, double h) {
    const double ix = std::min(b.x + b.w, w) - std::max(b.x, 0.0);
    const double iy = std::min(b.y + b.h, h) - std::max(b.y, 0.0);
    return ix > 0 && iy > 0;
}

}  // namespace

TEST_CASE("is_in_viewport basics") {
    const Viewport vp{1280, 720};
    CHECK(is_in_viewport({10, 10, 50, 20}, vp));
    CHECK_FALSE(is_in_viewport({-200, -200, 50, 20}, vp));
    CHECK(is_in_viewport({1270, 10, 50, 20}, vp));  // 10 px of horizontal overlap
    CHECK_FALSE(is_in_viewport({1280, 10, 50, 20}, vp));
    CHECK_FALSE(is_in_viewport({10, 10, 0, 20}, vp));  // degenerate box
}

TEST_CASE("is_in_viewport agrees with the intersection oracle and scales") {
    ts::Rng rng(7);
    for (int trial = 0; trial < 1000; ++trial) {
        const Box b{rng.range(-2000, 2000), rng.range(-2000, 2000), rng.range(0, 800),
                    rng.range(0, 800)};
        const Viewport vp{rng.range(1, 2000), rng.range(1, 2000)};
        const bool expected = intersects_positive(b, vp.width, vp.height);
        REQUIRE(is_in_viewport(b, vp) == expected);

        const double k = rng.range(0.1, 10.0);
        const Box scaled{b.x * k, b.y * k, b.w * k, b.h * k};
        const Viewport vps{vp.width * k, vp.height * k};
        REQUIRE(is_in_viewport(scaled, vps) == expected);
    }
}

TEST_CASE("validate_snapshot accepts a minimal snapshot") {
    CHECK(validate_snapshot(ts::minimal_snapshot()).empty());
}

namespace {

bool has_code(const std::vector<Violation>& vs, std::string_view code) {
    for (const auto& v : vs) {
        if (v.code == code) return true;
    }
    return false;
}

}  // namespace

TEST_CASE("validate_snapshot reports duplicate ids") {
    auto snap = ts::minimal_snapshot();
    snap.elements.push_back(ts::element("e0", {0, 0, 10, 10}));
    auto violations = validate_snapshot(snap);
    REQUIRE(violations.size() == 1);
    CHECK(violations[0].code == "duplicate-id");
}

TEST_CASE("validate_snapshot reports unsorted events") {
    auto snap = ts::minimal_snapshot();
    snap.events.push_back(ts::event(5, EventKind::Navigate));
    snap.events.push_back(ts::event(3, EventKind::Navigate));
    auto violations = validate_snapshot(snap);
    REQUIRE(violations.size() == 1);
    CHECK(violations[0].code == "unsorted-events");
}

TEST_CASE("validate_snapshot reports structural and field violations") {
    auto snap = ts::minimal_snapshot();
    snap.elements.push_back(ts::element("e1", {0, 0, 10, 10}, {}, "nowhere"));
    CHECK(has_code(validate_snapshot(snap), "dangling-parent"));

    snap = ts::minimal_snapshot();
    snap.viewport = {0, 720};
    CHECK(has_code(validate_snapshot(snap), "bad-viewport"));

    snap = ts::minimal_snapshot();
    snap.elements[0].bbox.w = -1;
    CHECK(has_code(validate_snapshot(snap), "negative-extent"));

    snap = ts::minimal_snapshot();
    snap.elements[0].style.opacity = 1.5;
    CHECK(has_code(validate_snapshot(snap), "bad-opacity"));

    snap = ts::minimal_snapshot();
    snap.elements[0].style.fg = {300, 0, 0};
    CHECK(has_code(validate_snapshot(snap), "bad-color"));

    snap = ts::minimal_snapshot();
    snap.elements[0].parent_id = "e0";  // self-cycle
    CHECK(has_code(validate_snapshot(snap), "parent-cycle"));

    snap = ts::minimal_snapshot();
    snap.text_blocks.push_back(ts::block("b0", "missing", "hello"));
    CHECK(has_code(validate_snapshot(snap), "dangling-text-block"));
}

TEST_CASE("validate_snapshot checks event field presence per kind") {
    auto snap = ts::minimal_snapshot();
    auto bad_response = ts::event(0, EventKind::Response);  // missing latency_ms
    snap.events.push_back(bad_response);
    CHECK(has_code(validate_snapshot(snap), "event-field-mismatch"));

    snap = ts::minimal_snapshot();
    auto bad_click = ts::click(0, "e0");
    bad_click.latency_ms = 10;  // latency on a click
    snap.events = {bad_click};
    CHECK(has_code(validate_snapshot(snap), "event-field-mismatch"));

    snap = ts::minimal_snapshot();
    auto bad_prompt = ts::event(0, EventKind::PromptShown);  // missing prompt_hash
    snap.events = {bad_prompt};
    CHECK(has_code(validate_snapshot(snap), "event-field-mismatch"));

    snap = ts::minimal_snapshot();
    auto bad_mutation = ts::event(0, EventKind::Mutation);  // missing boxes
    snap.events = {bad_mutation};
    CHECK(has_code(validate_snapshot(snap), "event-field-mismatch"));

    snap = ts::minimal_snapshot();
    snap.events = {ts::response(0, 120), ts::prompt(5, "e0", 42),
                   ts::mutation(9, "e0", {0, 0, 1, 1}, {5, 5, 1, 1})};
    CHECK(validate_snapshot(snap).empty());
}
