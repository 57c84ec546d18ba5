//! Built-in synthetic tool-server fleet used by the benchmark and fixtures.
//!
//! The corpus is 10 capability families × 4 locale domains (40 specialist
//! servers) plus 10 aggregation portals. Every string below is chosen to
//! exercise a specific retrieval failure mode:
//!
//! * Specialist descriptions use a formal register (one unique discriminator
//!   plus the family's formal vocabulary). *Anchored* query templates reuse
//!   both, so description-only matching works for them.
//! * *Anchorless* templates are vernacular: they share the locale slang with
//!   synthetic queries but zero content words with any description, so only
//!   an index augmented with synthetic queries can resolve them.
//! * Portal descriptions are long and enumerate many families' formal
//!   vocabulary plus every discriminator, so un-decomposed multi-intent
//!   queries drift toward portals unless the query is split first. Portal
//!   synthetic queries are themselves multi-intent mashups for the same
//!   reason on the augmented side.
//!
//! Synthetic expansion is deterministic: template-major, anchorless first,
//! filler-minor — so small query budgets already cover the vernacular
//! phrasing, and growing the budget past full template coverage only adds
//! filler variants. Benchmark fillers are disjoint from augmentation fillers
//! to keep surface overlap honest.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::path::Path;

use crate::registry::{ParamSpec, ParamType, Registry, ServerDescriptor, ToolSchema};
use crate::sim::{BehaviorCase, Fleet, ServerBehavior, SimError, ToolBehavior};

/// Canonical mixed-intent demo query used across fixtures and docs.
pub const BEIJING_QUERY: &str =
    "Beijing trip June 10-15. Need hotel, 2-3 attractions and things to do.";

/// Servers the canonical query should fan out to, in task order.
pub const BEIJING_SERVERS: [&str; 4] = [
    "beijing-weather",
    "beijing-attractions",
    "beijing-hotels",
    "beijing-routes",
];

/// Canned outputs of the four Beijing tasks, in task order.
pub const BEIJING_OUTPUTS: [&str; 4] = [
    "Sunny, 22-30°C",
    "Top picks: Forbidden City, Mutianyu Great Wall, Summer Palace.",
    "Reserved: Jade Courtyard Hotel near Wangfujing, June 10-15, 680 CNY per night.",
    "Two-day route: Day 1 Forbidden City and Jingshan Park; Day 2 Mutianyu Great Wall then Summer Palace.",
];

/// Primary-tool latencies of the Beijing servers, in task order (ms).
pub const BEIJING_LATENCIES_MS: [u64; 4] = [230, 620, 500, 300];

/// Default synthetic-query budget per server.
pub const DEFAULT_N_Q: usize = 20;

/// Fillers appended to synthetic (index-side) queries.
const AUG_FILLERS: [&str; 5] = [
    "this evening",
    "tomorrow morning",
    "right now",
    "later tonight",
    "sometime this week",
];

/// Fillers appended to benchmark (query-side) segments; disjoint from
/// [`AUG_FILLERS`] so bench queries never match an index phrase verbatim.
const BENCH_FILLERS: [&str; 5] = [
    "on friday",
    "next weekend",
    "in early june",
    "at month end",
    "over the holidays",
];

const DATE_PATTERN: &str = r"^\d{4}-\d{2}-\d{2}$";

/// Connectives the benchmark uses to join intents into one query. Each is a
/// decomposition connective, so rule-based splitting recovers exact segments.
pub const BENCH_JOINERS: [&str; 4] = [" and also ", ", and ", ", plus ", " as well as "];

// ---------------------------------------------------------------------------
// Family and domain tables
// ---------------------------------------------------------------------------

/// One capability family: shared description template, query templates, and
/// tool schemas. `{D}` in the description and `{d}` in anchored templates are
/// the domain discriminator; `{s}` is the domain slang; `{f}` a filler.
pub struct FamilySpec {
    pub key: &'static str,
    description: &'static str,
    anchored: &'static [&'static str],
    anchorless: &'static [&'static str],
    tools: fn() -> Vec<ToolSchema>,
}

/// One concrete server: a family instantiated for a locale.
pub struct DomainSpec {
    pub server_id: &'static str,
    pub family: usize,
    pub display: &'static str,
    pub disc: &'static str,
    pub slang: &'static str,
}

fn req(name: &str, param_type: ParamType) -> ParamSpec {
    ParamSpec {
        name: name.into(),
        param_type,
        required: true,
        description: None,
        values: vec![],
        pattern: None,
    }
}

fn opt(name: &str, param_type: ParamType) -> ParamSpec {
    ParamSpec {
        required: false,
        ..req(name, param_type)
    }
}

fn req_date(name: &str) -> ParamSpec {
    ParamSpec {
        pattern: Some(DATE_PATTERN.into()),
        ..req(name, ParamType::String)
    }
}

fn opt_enum(name: &str, values: &[&str]) -> ParamSpec {
    ParamSpec {
        values: values.iter().map(|v| v.to_string()).collect(),
        ..opt(name, ParamType::Enum)
    }
}

fn tool(name: &str, description: &str, params: Vec<ParamSpec>) -> ToolSchema {
    ToolSchema {
        name: name.into(),
        description: description.into(),
        params,
    }
}

/// The ten capability families. The first tool listed is the primary one the
/// scheduler prices a task at.
pub fn families() -> &'static [FamilySpec] {
    static FAMILIES: &[FamilySpec] = &[
        FamilySpec {
            key: "weather",
            description: "Reports {D} weather conditions with hourly forecast outlooks, \
                          rain likelihood, wind advisories, and seasonal temperature \
                          normals for the {D} region.",
            anchored: &[
                "{d} weather conditions with hourly forecast {f}",
                "hourly {d} rain forecast {f}",
                "{d} wind advisories with rain outlooks {f}",
                "seasonal temperature normals in {d} {f}",
                "{d} temperature forecast with wind speeds {f}",
                "rain likelihood for the {d} region {f}",
                "{d} weather reports with seasonal outlooks {f}",
                "{d} temperature swings with wind forecast {f}",
                "hourly wind conditions for {d} {f}",
            ],
            anchorless: &["do i need an umbrella {s} {f}"],
            tools: || {
                vec![
                    tool(
                        "get_weather",
                        "Forecast for a city on a date.",
                        vec![
                            req("city", ParamType::String),
                            req_date("date"),
                            opt_enum("unit", &["celsius", "fahrenheit"]),
                        ],
                    ),
                    tool(
                        "get_alerts",
                        "Active weather alerts for a region.",
                        vec![req("region", ParamType::String)],
                    ),
                ]
            },
        },
        FamilySpec {
            key: "sightseeing",
            description: "Curates {D} attractions with landmark profiles, sightseeing \
                          itineraries, opening hours, and entry pricing for visitors \
                          touring the {D} area.",
            anchored: &[
                "top {d} attractions with opening hours {f}",
                "best {d} sightseeing itineraries for visitors {f}",
                "{d} landmark opening hours {f}",
                "entry pricing for {d} attractions {f}",
                "must see {d} landmark profiles for sightseeing {f}",
                "{d} sightseeing itineraries with entry pricing {f}",
                "opening hours for {d} landmark sites {f}",
                "{d} attractions worth a visit with entry pricing {f}",
                "{d} landmark entry pricing {f}",
            ],
            anchorless: &["cool stuff to gawk at {s} {f}"],
            tools: || {
                vec![
                    tool(
                        "search",
                        "Search attractions in an area.",
                        vec![
                            req("area", ParamType::String),
                            opt_enum("category", &["landmark", "museum", "park", "family"]),
                            opt("limit", ParamType::Integer),
                        ],
                    ),
                    tool(
                        "get_details",
                        "Details for one attraction.",
                        vec![req("attraction_id", ParamType::String)],
                    ),
                ]
            },
        },
        FamilySpec {
            key: "lodging",
            description: "Matches {D} accommodation offering room availability, nightly \
                          rates, guest reviews, and reservation booking across {D} lodging \
                          choices.",
            anchored: &[
                "{d} room booking with nightly rates {f}",
                "{d} accommodation room availability {f}",
                "nightly {d} room rates {f}",
                "{d} room availability with guest reviews {f}",
                "{d} lodging reservation booking {f}",
                "cheap {d} accommodation with room rates {f}",
                "{d} booking availability for lodging {f}",
                "compare nightly {d} room rates {f}",
                "{d} guest reviews for accommodation {f}",
            ],
            anchorless: &["somewhere cozy to crash {s} {f}"],
            tools: || {
                vec![
                    tool(
                        "search_hotels",
                        "Find rooms in an area for a stay.",
                        vec![
                            req("area", ParamType::String),
                            req_date("check_in"),
                            req("nights", ParamType::Integer),
                        ],
                    ),
                    tool(
                        "book_room",
                        "Book a specific room.",
                        vec![
                            req("hotel_id", ParamType::String),
                            req("guests", ParamType::Integer),
                        ],
                    ),
                ]
            },
        },
        FamilySpec {
            key: "navigation",
            description: "Plans each {D} route with transit connections, travel duration \
                          estimates, stops sequencing, and turn guidance across the {D} \
                          network.",
            anchored: &[
                "plan a {d} route with transit stops {f}",
                "{d} route between stops with travel estimates {f}",
                "fastest {d} transit route connections {f}",
                "{d} travel duration estimates {f}",
                "turn guidance on the {d} route {f}",
                "{d} travel route with two stops {f}",
                "best {d} transit route across the network {f}",
                "{d} transit connections with duration estimates {f}",
                "{d} route stops sequencing {f}",
            ],
            anchorless: &["how do i get over there {s} {f}"],
            tools: || {
                vec![
                    tool(
                        "plan_route",
                        "Route between two points.",
                        vec![
                            req("origin", ParamType::String),
                            req("destination", ParamType::String),
                            opt_enum("mode", &["walk", "transit", "drive"]),
                        ],
                    ),
                    tool(
                        "estimate_time",
                        "Drive time of a saved route.",
                        vec![req("route_id", ParamType::String)],
                    ),
                ]
            },
        },
        FamilySpec {
            key: "dining",
            description: "Indexes {D} restaurant listings with menu highlights, table \
                          reservations, cuisine picks, and diner ratings across the {D} \
                          scene.",
            anchored: &[
                "best {d} restaurant menu listings {f}",
                "{d} restaurant menu highlights {f}",
                "{d} table reservations with cuisine picks {f}",
                "{d} cuisine picks from diner ratings {f}",
                "{d} restaurant diner ratings {f}",
                "{d} restaurant table reservations {f}",
                "top {d} restaurant cuisine picks {f}",
                "{d} restaurant menu picks worth trying {f}",
                "{d} diner ratings for cuisine {f}",
            ],
            anchorless: &["where do locals chow down {s} {f}"],
            tools: || {
                vec![
                    tool(
                        "find_restaurants",
                        "Restaurants in an area.",
                        vec![
                            req("area", ParamType::String),
                            opt_enum("cuisine", &["local", "international", "street"]),
                            opt("open_now", ParamType::Boolean),
                        ],
                    ),
                    tool(
                        "reserve_table",
                        "Reserve a table.",
                        vec![
                            req("restaurant_id", ParamType::String),
                            req("party_size", ParamType::Integer),
                        ],
                    ),
                ]
            },
        },
        FamilySpec {
            key: "finance",
            description: "Quotes {D} market figures including live exchange rate data, price \
                          movements, historical chart records, and conversion tools for {D} \
                          instruments.",
            anchored: &[
                "current {d} exchange rate quotes {f}",
                "live {d} price movements {f}",
                "{d} market rate quotes {f}",
                "{d} conversion rate quotes {f}",
                "historical {d} rate chart {f}",
                "live {d} price quotes {f}",
                "{d} market chart records {f}",
                "todays {d} exchange rate quotes {f}",
                "historical {d} exchange rate records {f}",
            ],
            anchorless: &["how much is my stash worth {s} {f}"],
            tools: || {
                vec![
                    tool(
                        "get_rate",
                        "Exchange rate between two codes.",
                        vec![req("base", ParamType::String), req("quote", ParamType::String)],
                    ),
                    tool(
                        "get_quote",
                        "Latest quote for a symbol.",
                        vec![req("symbol", ParamType::String)],
                    ),
                ]
            },
        },
        FamilySpec {
            key: "wellness",
            description: "Locates {D} health providers with appointment scheduling, service \
                          rosters, practitioner credentials, and session fees around the {D} \
                          community.",
            anchored: &[
                "{d} session appointment scheduling {f}",
                "{d} practitioner session fees {f}",
                "{d} health practitioner appointment openings {f}",
                "{d} health providers in the community {f}",
                "{d} health service rosters {f}",
                "{d} session scheduling with a practitioner {f}",
                "{d} appointment openings with session fees {f}",
                "compare {d} health practitioner credentials {f}",
                "{d} practitioner credentials with fees {f}",
            ],
            anchorless: &["somewhere to loosen up these shoulders {s} {f}"],
            tools: || {
                vec![
                    tool(
                        "find_provider",
                        "Providers by specialty and area.",
                        vec![
                            req("specialty", ParamType::String),
                            req("area", ParamType::String),
                        ],
                    ),
                    tool(
                        "check_stock",
                        "Whether an item is in stock.",
                        vec![req("item", ParamType::String)],
                    ),
                ]
            },
        },
        FamilySpec {
            key: "events",
            description: "Lists {D} events with showtimes, venue seating charts, ticket \
                          prices, and calendar updates across {D} programmes.",
            anchored: &[
                "{d} events calendar with showtimes {f}",
                "{d} venue showtimes with seating {f}",
                "{d} venue ticket prices {f}",
                "{d} venue seating charts {f}",
                "{d} events showtimes at the venue {f}",
                "{d} seating charts with ticket prices {f}",
                "upcoming {d} events on the venue calendar {f}",
                "{d} showtimes with ticket prices {f}",
                "{d} programmes calendar updates {f}",
            ],
            anchorless: &["anything fun happening {s} {f}"],
            tools: || {
                vec![
                    tool(
                        "list_events",
                        "Events at a venue on a date.",
                        vec![req("venue", ParamType::String), req_date("date")],
                    ),
                    tool(
                        "get_tickets",
                        "Buy tickets for an event.",
                        vec![
                            req("event_id", ParamType::String),
                            req("count", ParamType::Integer),
                        ],
                    ),
                ]
            },
        },
        FamilySpec {
            key: "shopping",
            description: "Searches {D} store inventory with product catalogues, price \
                          comparisons, shelf stock levels, and pickup counters across {D} \
                          retailers.",
            anchored: &[
                "{d} store inventory stock {f}",
                "{d} product stock levels {f}",
                "{d} store price comparisons {f}",
                "{d} shelf stock levels {f}",
                "{d} product pickup counters {f}",
                "{d} product price deals at retailers {f}",
                "cheapest {d} store pickup price check {f}",
                "{d} retailers with product stock {f}",
                "{d} price comparisons at retailers {f}",
            ],
            anchorless: &["hunting for a bargain {s} {f}"],
            tools: || {
                vec![
                    tool(
                        "search_items",
                        "Search a store's catalogue.",
                        vec![
                            req("store", ParamType::String),
                            req("query", ParamType::String),
                            opt("in_stock", ParamType::Boolean),
                        ],
                    ),
                    tool(
                        "price_check",
                        "Price for a SKU.",
                        vec![req("sku", ParamType::String)],
                    ),
                ]
            },
        },
        FamilySpec {
            key: "civic",
            description: "Handles {D} public services with application forms, office \
                          locations, processing status, and document requirements for {D} \
                          matters.",
            anchored: &[
                "{d} application processing status {f}",
                "{d} public office locations {f}",
                "{d} public document requirements checklist {f}",
                "{d} forms processing status {f}",
                "renew {d} application forms at the office {f}",
                "nearest {d} public services office {f}",
                "{d} application document requirements {f}",
                "{d} status check at the public office {f}",
                "{d} office application forms {f}",
            ],
            anchorless: &["how long is the queue {s} {f}"],
            tools: || {
                vec![
                    tool(
                        "check_status",
                        "Status of a filed case.",
                        vec![req("case_id", ParamType::String)],
                    ),
                    tool(
                        "book_appointment",
                        "Book an office visit.",
                        vec![req("office", ParamType::String), req_date("date")],
                    ),
                ]
            },
        },
    ];
    FAMILIES
}

/// The forty specialist servers (4 per family).
pub fn domains() -> &'static [DomainSpec] {
    static DOMAINS: &[DomainSpec] = &[
        // weather
        DomainSpec { server_id: "beijing-weather", family: 0, display: "Beijing Weather Desk", disc: "beijing", slang: "around the hutongs" },
        DomainSpec { server_id: "alpine-weather", family: 0, display: "Alpine Weather Desk", disc: "alpine", slang: "on the summit trail" },
        DomainSpec { server_id: "coastal-weather", family: 0, display: "Coastal Weather Desk", disc: "coastal", slang: "by the marina piers" },
        DomainSpec { server_id: "prairie-weather", family: 0, display: "Prairie Weather Desk", disc: "prairie", slang: "across the grain flats" },
        // sightseeing
        DomainSpec { server_id: "beijing-attractions", family: 1, display: "Beijing Attractions Guide", disc: "beijing", slang: "near the forbidden city" },
        DomainSpec { server_id: "museum-network", family: 1, display: "Museum Network", disc: "museum", slang: "in the gallery quarter" },
        DomainSpec { server_id: "themepark-guide", family: 1, display: "Themepark Guide", disc: "themepark", slang: "by the coaster gates" },
        DomainSpec { server_id: "heritage-trails", family: 1, display: "Heritage Trails", disc: "heritage", slang: "along the temple ruins" },
        // lodging
        DomainSpec { server_id: "beijing-hotels", family: 2, display: "Beijing Hotels Bureau", disc: "beijing", slang: "close to wangfujing street" },
        DomainSpec { server_id: "hostel-finder", family: 2, display: "Hostel Finder", disc: "hostel", slang: "near the backpacker strip" },
        DomainSpec { server_id: "resort-escapes", family: 2, display: "Resort Escapes", disc: "resort", slang: "on the lagoon shore" },
        DomainSpec { server_id: "cabin-retreats", family: 2, display: "Cabin Retreats", disc: "cabin", slang: "up the timber ridge" },
        // navigation
        DomainSpec { server_id: "beijing-routes", family: 3, display: "Beijing Routes Planner", disc: "beijing", slang: "between the ring roads" },
        DomainSpec { server_id: "metro-transit", family: 3, display: "Metro Transit Planner", disc: "metro", slang: "on the subway loop" },
        DomainSpec { server_id: "cycling-paths", family: 3, display: "Cycling Paths Planner", disc: "cycling", slang: "along the river greenway" },
        DomainSpec { server_id: "highway-driving", family: 3, display: "Highway Driving Planner", disc: "highway", slang: "past the toll interchange" },
        // dining
        DomainSpec { server_id: "noodle-houses", family: 4, display: "Noodle Houses Index", disc: "noodle", slang: "down the night market" },
        DomainSpec { server_id: "seafood-tables", family: 4, display: "Seafood Tables Index", disc: "seafood", slang: "at the wharf stalls" },
        DomainSpec { server_id: "vegan-bistros", family: 4, display: "Vegan Bistros Index", disc: "vegan", slang: "in the organic arcade" },
        DomainSpec { server_id: "barbecue-pits", family: 4, display: "Barbecue Pits Index", disc: "barbecue", slang: "behind the smokehouse yard" },
        // finance
        DomainSpec { server_id: "currency-exchange", family: 5, display: "Currency Exchange Quotes", disc: "currency", slang: "at the bureau counter" },
        DomainSpec { server_id: "equity-tickers", family: 5, display: "Equity Tickers Quotes", disc: "equity", slang: "on the trading floor" },
        DomainSpec { server_id: "crypto-wallets", family: 5, display: "Crypto Wallets Quotes", disc: "crypto", slang: "across the cold wallet apps" },
        DomainSpec { server_id: "loan-rates", family: 5, display: "Loan Rates Quotes", disc: "loan", slang: "with the credit union desk" },
        // wellness
        DomainSpec { server_id: "yoga-studios", family: 6, display: "Yoga Studios Locator", disc: "yoga", slang: "inside the lotus loft" },
        DomainSpec { server_id: "dental-clinics", family: 6, display: "Dental Clinics Locator", disc: "dental", slang: "near the smile parlor" },
        DomainSpec { server_id: "pharmacy-stock", family: 6, display: "Pharmacy Stock Locator", disc: "pharmacy", slang: "at the corner dispensary" },
        DomainSpec { server_id: "fitness-gyms", family: 6, display: "Fitness Gyms Locator", disc: "fitness", slang: "under the barbell racks" },
        // events
        DomainSpec { server_id: "concert-halls", family: 7, display: "Concert Halls Listings", disc: "concert", slang: "behind the amphitheater" },
        DomainSpec { server_id: "sports-fixtures", family: 7, display: "Sports Fixtures Listings", disc: "sports", slang: "by the stadium turnstiles" },
        DomainSpec { server_id: "cinema-times", family: 7, display: "Cinema Times Listings", disc: "cinema", slang: "in the screening annex" },
        DomainSpec { server_id: "festival-calendar", family: 7, display: "Festival Calendar Listings", disc: "festival", slang: "around the parade grounds" },
        // shopping
        DomainSpec { server_id: "electronics-outlets", family: 8, display: "Electronics Outlets Search", disc: "electronics", slang: "in the gadget alley" },
        DomainSpec { server_id: "fashion-boutiques", family: 8, display: "Fashion Boutiques Search", disc: "fashion", slang: "along the runway mews" },
        DomainSpec { server_id: "grocery-markets", family: 8, display: "Grocery Markets Search", disc: "grocery", slang: "by the produce aisles" },
        DomainSpec { server_id: "antique-bazaars", family: 8, display: "Antique Bazaars Search", disc: "antique", slang: "through the curio lanes" },
        // civic
        DomainSpec { server_id: "visa-services", family: 9, display: "Visa Services Office", disc: "visa", slang: "at the consulate window" },
        DomainSpec { server_id: "parking-permits", family: 9, display: "Parking Permits Office", disc: "parking", slang: "by the meter bays" },
        DomainSpec { server_id: "recycling-depots", family: 9, display: "Recycling Depots Office", disc: "recycling", slang: "behind the sorting bins" },
        DomainSpec { server_id: "library-branches", family: 9, display: "Library Branches Office", disc: "library", slang: "among the reading stacks" },
    ];
    DOMAINS
}

const PORTAL_IDS: [&str; 10] = [
    "travel-hub-portal",
    "city-concierge-portal",
    "weekend-planner-portal",
    "metro-daily-portal",
    "lifestyle-compass-portal",
    "errand-runner-portal",
    "leisure-atlas-portal",
    "trip-weaver-portal",
    "daily-digest-portal",
    "omni-assist-portal",
];

/// Per-family vocabulary snippets echoed inside portal descriptions so an
/// un-split multi-intent query overlaps a portal on every facet at once,
/// while any single decomposed segment only grazes it.
const PORTAL_BLURBS: [&str; 10] = [
    "hourly rain forecast wind temperature",
    "attractions landmark sightseeing entry pricing",
    "accommodation room rates booking availability",
    "route transit stops travel connections",
    "restaurant menu cuisine table reservations",
    "exchange rate market price quotes",
    "health practitioner appointment session fees",
    "events showtimes venue seating ticket prices",
    "store inventory product stock price",
    "application forms office status document requirements",
];

fn fill(template: &str, domain: &DomainSpec, filler: &str) -> String {
    template
        .replace("{d}", domain.disc)
        .replace("{s}", domain.slang)
        .replace("{f}", filler)
}

/// All query templates of a domain's family, anchorless first. The order is
/// the synthetic-expansion order: vernacular coverage lands in the first few
/// queries so tiny budgets already help.
fn templates(domain: &DomainSpec) -> Vec<&'static str> {
    let family = &families()[domain.family];
    family
        .anchorless
        .iter()
        .chain(family.anchored.iter())
        .copied()
        .collect()
}

/// Deterministic synthetic queries for one specialist server:
/// template-major over [`templates`], filler-minor over [`AUG_FILLERS`].
pub fn synthetic_queries(domain: &DomainSpec, n_q: usize) -> Vec<String> {
    let templates = templates(domain);
    (0..n_q)
        .map(|n| {
            let template = templates[n % templates.len()];
            let filler = AUG_FILLERS[(n / templates.len()) % AUG_FILLERS.len()];
            fill(template, domain, filler)
        })
        .collect()
}

/// One benchmark query segment targeting `domain`, drawn uniformly over the
/// family's templates with a benchmark filler.
pub fn bench_segment(domain: &DomainSpec, rng: &mut impl Rng) -> String {
    let templates = templates(domain);
    let template = templates[rng.random_range(0..templates.len())];
    let filler = BENCH_FILLERS[rng.random_range(0..BENCH_FILLERS.len())];
    fill(template, domain, filler)
}

/// Portal synthetic queries: multi-intent mashups of specialist segments
/// joined by decomposition connectives, seeded per portal. Portals mine these
/// from mixed live traffic, so the segments carry fillers from both pools
/// rather than only the expansion fillers used for specialist queries.
fn portal_queries(portal_index: usize, n_q: usize) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x7541_0000 + portal_index as u64);
    let domains = domains();
    let fillers: Vec<&str> = AUG_FILLERS.iter().chain(BENCH_FILLERS.iter()).copied().collect();
    (0..n_q.min(24))
        .map(|_| {
            let parts: Vec<String> = (0..rng.random_range(2..=3))
                .map(|_| {
                    let domain = &domains[rng.random_range(0..domains.len())];
                    let family = &families()[domain.family];
                    let template = family.anchored[rng.random_range(0..family.anchored.len())];
                    fill(template, domain, fillers[rng.random_range(0..fillers.len())])
                })
                .collect();
            let joiner = BENCH_JOINERS.choose(&mut rng).expect("non-empty joiners");
            parts.join(joiner)
        })
        .collect()
}

fn portal_descriptor(portal_index: usize, n_q: usize) -> ServerDescriptor {
    let id = PORTAL_IDS[portal_index];
    // Portal copy is written like the bundled requests it serves: connective
    // and scheduling words up front, then one terse blurb per facet (rotated
    // per portal; the embedder window trims the tail, so each portal
    // foregrounds a different facet slice). A query that strings several
    // intents together overlaps the portal on every facet plus the glue
    // words, while a single focused request barely grazes it.
    let blurbs: Vec<&str> = (0..PORTAL_BLURBS.len())
        .map(|k| PORTAL_BLURBS[(portal_index + k) % PORTAL_BLURBS.len()])
        .collect();
    let description = format!(
        "All in one portal for friday weekend june holidays or month end errands, \
         plus bundled requests as well as single tasks, covering {}.",
        blurbs.join(", "),
    );
    let domain_values: Vec<String> = families().iter().map(|f| f.key.to_string()).collect();
    ServerDescriptor {
        server_id: id.into(),
        name: title_case(id),
        description,
        tools: vec![ToolSchema {
            name: "search_portal".into(),
            description: "Federated search across every linked service.".into(),
            params: vec![
                req("query", ParamType::String),
                ParamSpec {
                    values: domain_values,
                    ..opt("domain", ParamType::Enum)
                },
            ],
        }],
        synthetic_queries: portal_queries(portal_index, n_q),
    }
}

fn title_case(id: &str) -> String {
    id.split('-')
        .map(|w| {
            let mut chars = w.chars();
            match chars.next() {
                Some(first) => first.to_uppercase().collect::<String>() + chars.as_str(),
                None => String::new(),
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn domain_descriptor(domain: &DomainSpec, n_q: usize) -> ServerDescriptor {
    let family = &families()[domain.family];
    ServerDescriptor {
        server_id: domain.server_id.into(),
        name: domain.display.into(),
        description: family.description.replace("{D}", domain.disc),
        tools: (family.tools)(),
        synthetic_queries: synthetic_queries(domain, n_q),
    }
}

/// Build the full 50-server registry with `n_q` synthetic queries per server.
pub fn build_registry(n_q: usize) -> Registry {
    let mut registry = Registry::new();
    for domain in domains() {
        registry
            .insert(domain_descriptor(domain, n_q))
            .expect("corpus descriptors are valid and unique");
    }
    for portal_index in 0..PORTAL_IDS.len() {
        registry
            .insert(portal_descriptor(portal_index, n_q))
            .expect("portal descriptors are valid and unique");
    }
    registry
}

fn behavior(server_id: &str, tool: &str, latency_ms: u64, default: &str) -> ServerBehavior {
    let mut tools = BTreeMap::new();
    tools.insert(
        tool.to_string(),
        ToolBehavior {
            latency_ms,
            default: Some(default.to_string()),
            cases: vec![],
        },
    );
    ServerBehavior {
        server_id: server_id.into(),
        tools,
    }
}

/// Build the simulated fleet: the registry plus behavior tables. Every
/// server answers its primary tool; the four Beijing servers additionally
/// carry the canonical latencies and canned results.
pub fn build_fleet(n_q: usize) -> Fleet {
    let registry = build_registry(n_q);
    let mut behaviors = Vec::new();
    for domain in domains() {
        let primary = &(families()[domain.family].tools)()[0].name;
        let mut entry = behavior(
            domain.server_id,
            primary,
            0,
            &format!("{}: standard result prepared.", domain.display),
        );
        if let Some(slot) = BEIJING_SERVERS.iter().position(|s| *s == domain.server_id) {
            let tool = entry.tools.get_mut(primary).expect("primary behavior");
            tool.latency_ms = BEIJING_LATENCIES_MS[slot];
            tool.default = Some(BEIJING_OUTPUTS[slot].to_string());
            if domain.server_id == "beijing-weather" {
                tool.cases.push(BehaviorCase {
                    params: serde_json::json!({"city": "Beijing", "date": "2025-06-10"}),
                    result: BEIJING_OUTPUTS[0].to_string(),
                });
            }
        }
        behaviors.push(entry);
    }
    for id in PORTAL_IDS {
        behaviors.push(behavior(
            id,
            "search_portal",
            0,
            "Portal digest: aggregated summary across linked services.",
        ));
    }
    Fleet::new(registry, behaviors).expect("corpus behaviors match corpus registry")
}

/// Sub-queries the scripted decomposition returns for [`BEIJING_QUERY`].
pub fn beijing_sub_queries() -> Vec<String> {
    vec![
        "hourly beijing forecast for june 10".into(),
        "top beijing attractions for a short trip".into(),
        "book a beijing room for june 10 to 15".into(),
        "plan a beijing route between the picks".into(),
    ]
}

/// The scripted plan for [`BEIJING_QUERY`]: weather, attractions, and hotels
/// fan into a final routing task.
pub fn beijing_plan_json() -> serde_json::Value {
    serde_json::json!({
        "tasks": {
            "T1": { "query": "hourly beijing forecast for june 10", "server": "beijing-weather" },
            "T2": { "query": "top beijing attractions for a short trip", "server": "beijing-attractions" },
            "T3": { "query": "book a beijing room for june 10 to 15", "server": "beijing-hotels" },
            "T4": {
                "query": "plan a beijing route covering {{T2.output}} and staying at {{T3.output}}",
                "server": "beijing-routes"
            }
        },
        "dependency": ["T2->T4", "T3->T4"]
    })
}

/// Replay script binding [`BEIJING_QUERY`] to the canonical decomposition and
/// plan. Execution-stage prompts fall through to the rule-based provider.
pub fn beijing_replay() -> serde_json::Value {
    serde_json::json!({
        "entries": [
            {
                "match": format!("Query: {BEIJING_QUERY}"),
                "responses": [
                    serde_json::to_string(&beijing_sub_queries()).expect("serializable")
                ]
            },
            {
                "match": format!("Original query: {BEIJING_QUERY}"),
                "responses": [beijing_plan_json().to_string()]
            }
        ]
    })
}

/// Write the offline fixture: one descriptor and one behavior table per
/// server plus `replay.json` with the canonical scripted responses.
pub fn write_fixture(dir: &Path) -> Result<(), SimError> {
    build_fleet(DEFAULT_N_Q).save_dir(dir)?;
    let path = dir.join("replay.json");
    let text = serde_json::to_string_pretty(&beijing_replay()).expect("serializable");
    std::fs::write(&path, text).map_err(|e| SimError::Io {
        path: path.display().to_string(),
        source: e,
    })
}
