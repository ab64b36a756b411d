//! Explicit realizations of the BS and blockage processes and the exact
//! geometric LoS, reflection and association tests on them.

use super::MonteCarloError;
use crate::analytic::NetworkParams;
use crate::geometry::{closed_segments_intersect, sample_ppp, side_of_line, Point2, Segment, Window};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::TAU;
use std::sync::Arc;

/// Below this many blockages a linear scan beats the grid.
pub const BRUTE_FORCE_LIMIT: usize = 1000;
const MAX_GRID_SIDE: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RisAttachment {
    /// Half-plane of the host line (as reported by `side_of_line`) that is coated.
    pub coated_side: i8,
    pub meta_count: u32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockageEntity {
    pub segment: Segment,
    pub ris: Option<RisAttachment>,
    /// Uniform mark; the blockage carries an RIS iff `mark < μ`.
    pub mark: f64,
    latent: RisAttachment,
}

/// Uniform-grid bucket index over segments.
#[derive(Debug, Clone)]
pub struct SegmentIndex {
    x0: f64,
    y0: f64,
    cell: f64,
    nx: usize,
    ny: usize,
    starts: Vec<u32>,
    items: Vec<u32>,
    brute: usize,
}

impl SegmentIndex {
    /// Buckets every segment into all cells its bounding box overlaps.
    pub fn build(segments: &[(Point2, Point2)], extent: &Window, cell: f64) -> Self {
        if segments.len() < BRUTE_FORCE_LIMIT || !(cell > 0.0) {
            return Self {
                x0: 0.0,
                y0: 0.0,
                cell: 1.0,
                nx: 0,
                ny: 0,
                starts: Vec::new(),
                items: Vec::new(),
                brute: segments.len(),
            };
        }
        let cell = cell
            .max(extent.width() / MAX_GRID_SIDE as f64)
            .max(extent.height() / MAX_GRID_SIDE as f64);
        let nx = ((extent.width() / cell).ceil() as usize).max(1);
        let ny = ((extent.height() / cell).ceil() as usize).max(1);
        let mut index = Self {
            x0: extent.x_min,
            y0: extent.y_min,
            cell,
            nx,
            ny,
            starts: Vec::new(),
            items: Vec::new(),
            brute: 0,
        };
        let ranges: Vec<(usize, usize, usize, usize)> = segments
            .iter()
            .map(|&(p, q)| {
                let (c0, c1) = (index.col(p.x.min(q.x)), index.col(p.x.max(q.x)));
                let (r0, r1) = (index.row(p.y.min(q.y)), index.row(p.y.max(q.y)));
                (c0, c1, r0, r1)
            })
            .collect();
        let mut counts = vec![0u32; nx * ny + 1];
        for &(c0, c1, r0, r1) in &ranges {
            for r in r0..=r1 {
                for c in c0..=c1 {
                    counts[r * nx + c + 1] += 1;
                }
            }
        }
        for i in 1..counts.len() {
            counts[i] += counts[i - 1];
        }
        let mut fill = counts.clone();
        let mut items = vec![0u32; counts[nx * ny] as usize];
        for (k, &(c0, c1, r0, r1)) in ranges.iter().enumerate() {
            for r in r0..=r1 {
                for c in c0..=c1 {
                    let slot = &mut fill[r * nx + c];
                    items[*slot as usize] = k as u32;
                    *slot += 1;
                }
            }
        }
        index.starts = counts;
        index.items = items;
        index
    }

    fn col(&self, x: f64) -> usize {
        (((x - self.x0) / self.cell).floor().max(0.0) as usize).min(self.nx - 1)
    }

    fn row(&self, y: f64) -> usize {
        (((y - self.y0) / self.cell).floor().max(0.0) as usize).min(self.ny - 1)
    }

    fn bucket(&self, c: usize, r: usize) -> &[u32] {
        let k = r * self.nx + c;
        &self.items[self.starts[k] as usize..self.starts[k + 1] as usize]
    }

    /// Calls `hit` on every segment that may intersect `pq` (possibly more
    /// than once) until it returns true. Returns whether any call did.
    pub fn any_candidate<F: FnMut(usize) -> bool>(&self, p: Point2, q: Point2, mut hit: F) -> bool {
        if self.nx == 0 {
            return (0..self.brute).any(hit);
        }
        let (a, b) = if p.x <= q.x { (p, q) } else { (q, p) };
        let (c0, c1) = (self.col(a.x), self.col(b.x));
        let eps = 1e-9 * self.cell;
        let dx = b.x - a.x;
        let y_at = |x: f64| {
            if dx > 0.0 {
                a.y + (b.y - a.y) * ((x - a.x) / dx).clamp(0.0, 1.0)
            } else {
                a.y
            }
        };
        for c in c0..=c1 {
            let x_lo = if c == c0 {
                a.x
            } else {
                (self.x0 + c as f64 * self.cell - eps).max(a.x)
            };
            let x_hi = if c == c1 {
                b.x
            } else {
                (self.x0 + (c + 1) as f64 * self.cell + eps).min(b.x)
            };
            let (ya, yb) = if dx > 0.0 { (y_at(x_lo), y_at(x_hi)) } else { (a.y, b.y) };
            let (r0, r1) = (self.row(ya.min(yb) - eps), self.row(ya.max(yb) + eps));
            for r in r0..=r1 {
                if self.bucket(c, r).iter().any(|&k| hit(k as usize)) {
                    return true;
                }
            }
        }
        false
    }
}

/// One sample of the BS and blockage processes.
#[derive(Debug, Clone)]
pub struct Realization {
    pub bs: Vec<Point2>,
    pub blockages: Vec<BlockageEntity>,
    pub window: Window,
    pub seed: u64,
    pub params: NetworkParams,
    endpoints: Arc<Vec<(Point2, Point2)>>,
    index: Arc<SegmentIndex>,
    ris: Vec<usize>,
}

/// Samples BSs and blockages over the expanded window.
///
/// Every blockage draws its RIS mark, coated side and meta-surface count
/// whether or not it ends up carrying an RIS, so realizations with the same
/// seed and different `μ` share all geometry and have nested RIS sets.
pub fn build_realization(params: &NetworkParams, window: &Window, seed: u64) -> Result<Realization, MonteCarloError> {
    params.validate()?;
    window.validate()?;
    let mut bs_rng = ChaCha8Rng::seed_from_u64(seed);
    bs_rng.set_stream(1);
    let mut blk_rng = ChaCha8Rng::seed_from_u64(seed);
    blk_rng.set_stream(2);
    let bs = sample_ppp(params.lambda_bs_m2(), window, &mut bs_rng)?;
    let mids = sample_ppp(params.lambda_b_m2(), window, &mut blk_rng)?;
    let mut blockages = Vec::with_capacity(mids.len());
    for mid in mids {
        let len = if params.len_max > params.len_min {
            blk_rng.random_range(params.len_min..params.len_max)
        } else {
            params.len_min
        };
        let angle = blk_rng.random_range(0.0..TAU);
        let mark: f64 = blk_rng.random();
        let coated_side = if blk_rng.random::<bool>() { 1 } else { -1 };
        let meta_count = params.meta_dist.sample(&mut blk_rng);
        blockages.push(BlockageEntity {
            segment: Segment::new(mid, 0.5 * len, angle)?,
            ris: None,
            mark,
            latent: RisAttachment {
                coated_side,
                meta_count,
            },
        });
    }
    let endpoints: Vec<(Point2, Point2)> = blockages.iter().map(|b| b.segment.endpoints()).collect();
    let index = SegmentIndex::build(&endpoints, &window.expanded(), params.len_max);
    let mut r = Realization {
        bs,
        blockages,
        window: *window,
        seed,
        params: params.clone(),
        endpoints: Arc::new(endpoints),
        index: Arc::new(index),
        ris: Vec::new(),
    };
    r.apply_mu(params.mu);
    Ok(r)
}

impl Realization {
    fn apply_mu(&mut self, mu: f64) {
        self.params.mu = mu;
        self.ris.clear();
        for (k, b) in self.blockages.iter_mut().enumerate() {
            b.ris = (b.mark < mu).then_some(b.latent);
            if b.ris.is_some() {
                self.ris.push(k);
            }
        }
    }

    /// Same geometry with the RIS fraction changed to `mu`.
    pub fn with_mu(&self, mu: f64) -> Result<Realization, MonteCarloError> {
        self.params.clone().with_mu(mu).validate()?;
        let mut r = self.clone();
        r.apply_mu(mu);
        Ok(r)
    }

    /// Same blockages and RISs with a different BS set.
    pub fn with_bs(&self, bs: Vec<Point2>) -> Realization {
        Realization { bs, ..self.clone() }
    }

    /// Indices of blockages carrying an RIS.
    pub fn ris_indices(&self) -> &[usize] {
        &self.ris
    }

    /// Point location of the RIS on blockage `k`.
    pub fn ris_position(&self, k: usize) -> Point2 {
        self.blockages[k].segment.midpoint
    }
}

/// True iff the segment `pq` meets no blockage other than `exclude`.
pub fn los_clear(p: Point2, q: Point2, realization: &Realization, exclude: Option<usize>) -> bool {
    let ends = &realization.endpoints;
    let blocked = realization.index.any_candidate(p, q, |k| {
        if Some(k) == exclude {
            return false;
        }
        let (e1, e2) = ends[k];
        closed_segments_intersect(p, q, e1, e2)
    });
    !blocked
}

/// Whether `u` and `y` both sit on the coated side of blockage `b`'s RIS.
pub fn sides_match(u: Point2, y: Point2, b: &BlockageEntity) -> bool {
    match b.ris {
        Some(ris) => side_of_line(u, &b.segment) == ris.coated_side && side_of_line(y, &b.segment) == ris.coated_side,
        None => false,
    }
}

/// Whether the RIS on blockage `b` gives an indirect LoS path from `u` to `y`.
pub fn indirect_feasible(u: Point2, y: Point2, b: usize, realization: &Realization) -> bool {
    let entity = &realization.blockages[b];
    if !sides_match(u, y, entity) {
        return false;
    }
    let z = entity.segment.midpoint;
    los_clear(u, z, realization, Some(b)) && los_clear(z, y, realization, Some(b))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkTag {
    Direct,
    Indirect,
    Blind,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssociationOutcome {
    pub tag: LinkTag,
    pub path_loss: Option<f64>,
    pub serving_bs: Option<usize>,
    pub serving_ris: Option<usize>,
    /// Length of the serving path, meters.
    pub path_length: Option<f64>,
}

impl AssociationOutcome {
    pub fn blind() -> Self {
        Self {
            tag: LinkTag::Blind,
            path_loss: None,
            serving_bs: None,
            serving_ris: None,
            path_length: None,
        }
    }
}

/// Per-user cache: BSs by distance, and (built on first use) RISs by
/// distance with memoised user-to-RIS LoS results.
pub(crate) struct UserView<'a> {
    pub u: Point2,
    pub real: &'a Realization,
    /// BS indices sorted by distance from `u`, with the distance.
    pub bs_order: Vec<(f64, usize)>,
    ris_order: Option<Vec<(f64, usize)>>,
    ris_los: Vec<u8>,
}

impl<'a> UserView<'a> {
    pub fn new(u: Point2, real: &'a Realization) -> Self {
        let mut bs_order: Vec<(f64, usize)> = real.bs.iter().enumerate().map(|(i, b)| (u.distance(*b), i)).collect();
        bs_order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        Self {
            u,
            real,
            bs_order,
            ris_order: None,
            ris_los: Vec::new(),
        }
    }

    /// RIS blockage indices sorted by distance from `u`, with the distance.
    pub fn ris_order(&mut self) -> &[(f64, usize)] {
        if self.ris_order.is_none() {
            let (u, real) = (self.u, self.real);
            let mut order: Vec<(f64, usize)> = real
                .ris
                .iter()
                .map(|&k| (u.distance(real.blockages[k].segment.midpoint), k))
                .collect();
            order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            self.ris_los = vec![0; real.blockages.len()];
            self.ris_order = Some(order);
        }
        self.ris_order.as_deref().expect("just built")
    }

    /// LoS of the user–RIS leg, memoised.
    pub fn user_sees_ris(&mut self, k: usize) -> bool {
        self.ris_order();
        match self.ris_los[k] {
            1 => true,
            2 => false,
            _ => {
                let clear = los_clear(self.u, self.real.blockages[k].segment.midpoint, self.real, Some(k));
                self.ris_los[k] = if clear { 1 } else { 2 };
                clear
            }
        }
    }

    /// Full indirect test for RIS `k` and BS position `y`, using the cache.
    pub fn reflect(&mut self, k: usize, y: Point2) -> bool {
        let entity = &self.real.blockages[k];
        if !sides_match(self.u, y, entity) {
            return false;
        }
        if !self.user_sees_ris(k) {
            return false;
        }
        los_clear(entity.segment.midpoint, y, self.real, Some(k))
    }
}

/// Minimum average path-loss association for a user at `u`.
pub fn associate_user(u: Point2, realization: &Realization) -> AssociationOutcome {
    let mut view = UserView::new(u, realization);
    associate_in_view(&mut view)
}

pub(crate) fn associate_in_view(view: &mut UserView<'_>) -> AssociationOutcome {
    let real = view.real;
    let alpha = real.params.alpha;
    let m_max = real.params.meta_dist.max() as f64;
    let gain_max = m_max * m_max;
    let mut best = AssociationOutcome::blind();
    let mut best_pl = f64::INFINITY;
    let bs_order = view.bs_order.clone();
    let ris_order = view.ris_order().to_vec();
    for &(r, i) in &bs_order {
        if r.powf(alpha) / gain_max >= best_pl {
            break;
        }
        let y = real.bs[i];
        if los_clear(view.u, y, real, None) {
            let pl = r.powf(alpha);
            if pl < best_pl {
                best_pl = pl;
                best = AssociationOutcome {
                    tag: LinkTag::Direct,
                    path_loss: Some(pl),
                    serving_bs: Some(i),
                    serving_ris: None,
                    path_length: Some(r),
                };
            }
            continue;
        }
        for &(t, k) in &ris_order {
            // t + d >= max(r, 2t - r)
            if (2.0 * t - r).max(r).powf(alpha) / gain_max >= best_pl {
                break;
            }
            let ris = real.blockages[k].ris.expect("indexed blockage carries an RIS");
            let z = real.blockages[k].segment.midpoint;
            let len = t + z.distance(y);
            let gain = (ris.meta_count as f64).powi(2);
            let pl = len.powf(alpha) / gain;
            if pl >= best_pl {
                continue;
            }
            if view.reflect(k, y) {
                best_pl = pl;
                best = AssociationOutcome {
                    tag: LinkTag::Indirect,
                    path_loss: Some(pl),
                    serving_bs: Some(i),
                    serving_ris: Some(k),
                    path_length: Some(len),
                };
            }
        }
    }
    best
}

/// Equivalent to `associate_user(u, realization).tag != Blind`, with early exit.
pub fn is_covered(u: Point2, realization: &Realization) -> bool {
    let mut view = UserView::new(u, realization);
    covered_in_view(&mut view)
}

pub(crate) fn covered_in_view(view: &mut UserView<'_>) -> bool {
    let real = view.real;
    if view
        .bs_order
        .iter()
        .any(|&(_, i)| los_clear(view.u, real.bs[i], real, None))
    {
        return true;
    }
    // every BS is NLoS from here on
    let ris_order = view.ris_order().to_vec();
    for &(_, k) in &ris_order {
        let entity = &real.blockages[k];
        let coated = entity.ris.expect("indexed blockage carries an RIS").coated_side;
        if side_of_line(view.u, &entity.segment) != coated || !view.user_sees_ris(k) {
            continue;
        }
        let z = entity.segment.midpoint;
        for &(_, i) in &view.bs_order {
            let y = real.bs[i];
            if side_of_line(y, &entity.segment) == coated && los_clear(z, y, real, Some(k)) {
                return true;
            }
        }
    }
    false
}

/// Shortest LoS path (direct, or indirect via an RIS for NLoS BSs) no longer
/// than `x`. With `indirect_only` set, only indirect paths count.
pub(crate) fn path_within(view: &mut UserView<'_>, x: f64, indirect_only: bool) -> bool {
    let real = view.real;
    let bs_order = view.bs_order.clone();
    let ris_order = view.ris_order().to_vec();
    for &(r, i) in &bs_order {
        if r > x {
            break;
        }
        let y = real.bs[i];
        if los_clear(view.u, y, real, None) {
            if indirect_only {
                continue;
            }
            return true;
        }
        for &(t, k) in &ris_order {
            if (2.0 * t - r).max(r) > x {
                break;
            }
            let z = real.blockages[k].segment.midpoint;
            if t + z.distance(y) <= x && view.reflect(k, y) {
                return true;
            }
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::MetaSurfaceDistribution;

    fn empty_params() -> NetworkParams {
        NetworkParams::new(0.0, 0.0).with_lambda_bs(0.0)
    }

    fn entity(mid: Point2, half: f64, angle: f64, ris: Option<RisAttachment>) -> BlockageEntity {
        BlockageEntity {
            segment: Segment::new(mid, half, angle).unwrap(),
            ris,
            mark: if ris.is_some() { 0.0 } else { 1.0 },
            latent: ris.unwrap_or(RisAttachment {
                coated_side: 1,
                meta_count: 1,
            }),
        }
    }

    fn manual(params: NetworkParams, bs: Vec<Point2>, blockages: Vec<BlockageEntity>) -> Realization {
        let window = Window::centered_square(2000.0, 0.0).unwrap();
        let endpoints: Vec<(Point2, Point2)> = blockages.iter().map(|b| b.segment.endpoints()).collect();
        let index = SegmentIndex::build(&endpoints, &window, params.len_max);
        let ris = blockages
            .iter()
            .enumerate()
            .filter(|(_, b)| b.ris.is_some())
            .map(|(k, _)| k)
            .collect();
        Realization {
            bs,
            blockages,
            window,
            seed: 0,
            params,
            endpoints: Arc::new(endpoints),
            index: Arc::new(index),
            ris,
        }
    }

    #[test]
    fn empty_blockages_are_clear() {
        let r = manual(empty_params(), vec![], vec![]);
        assert!(los_clear(Point2::new(0.0, 0.0), Point2::new(100.0, 0.0), &r, None));
    }

    #[test]
    fn crossing_blockage_blocks_unless_excluded() {
        let b = entity(Point2::new(50.0, 0.0), 5.0, std::f64::consts::FRAC_PI_2, None);
        let r = manual(empty_params(), vec![], vec![b]);
        let (p, q) = (Point2::new(0.0, 0.0), Point2::new(100.0, 0.0));
        assert!(!los_clear(p, q, &r, None));
        assert!(los_clear(p, q, &r, Some(0)));
    }

    #[test]
    fn direct_association_path_loss() {
        let r = manual(empty_params(), vec![Point2::new(100.0, 0.0)], vec![]);
        let out = associate_user(Point2::new(0.0, 0.0), &r);
        assert_eq!(out.tag, LinkTag::Direct);
        assert!((out.path_loss.unwrap() - 1e6).abs() < 1e-6);
        assert_eq!(out.serving_bs, Some(0));
    }

    #[test]
    fn no_bs_is_blind() {
        let r = manual(empty_params(), vec![], vec![]);
        assert_eq!(associate_user(Point2::new(0.0, 0.0), &r).tag, LinkTag::Blind);
        assert!(!is_covered(Point2::new(0.0, 0.0), &r));
    }

    /// User at the origin, BS at (100√2, 0) blocked by a wall, RIS at
    /// (50√2, 50√2) on a horizontal host facing down: legs of 100 m each.
    fn indirect_scene(meta: u32, coated_side: i8) -> Realization {
        let s = 50.0 * 2f64.sqrt();
        let wall = entity(Point2::new(s, 0.0), 5.0, std::f64::consts::FRAC_PI_2, None);
        let host = entity(
            Point2::new(s, s),
            5.0,
            0.0,
            Some(RisAttachment {
                coated_side,
                meta_count: meta,
            }),
        );
        let params = empty_params().with_meta(MetaSurfaceDistribution::fixed(meta).unwrap());
        manual(params, vec![Point2::new(2.0 * s, 0.0)], vec![wall, host])
    }

    #[test]
    fn indirect_association_path_loss() {
        // host direction is +x, so points below it are on the right (-1)
        let r = indirect_scene(2, -1);
        let out = associate_user(Point2::new(0.0, 0.0), &r);
        assert_eq!(out.tag, LinkTag::Indirect);
        assert!((out.path_loss.unwrap() - 2e6).abs() < 1e-3);
        assert_eq!(out.serving_ris, Some(1));
        assert!(is_covered(Point2::new(0.0, 0.0), &r));
    }

    #[test]
    fn wrong_coated_side_is_blind() {
        let r = indirect_scene(2, 1);
        assert_eq!(associate_user(Point2::new(0.0, 0.0), &r).tag, LinkTag::Blind);
        assert!(!is_covered(Point2::new(0.0, 0.0), &r));
    }

    #[test]
    fn opposite_sides_are_infeasible() {
        let host = entity(
            Point2::new(0.0, 10.0),
            5.0,
            0.0,
            Some(RisAttachment {
                coated_side: -1,
                meta_count: 1,
            }),
        );
        let r = manual(empty_params(), vec![], vec![host]);
        assert!(!indirect_feasible(Point2::new(0.0, 0.0), Point2::new(0.0, 20.0), 0, &r));
        assert!(indirect_feasible(Point2::new(0.0, 0.0), Point2::new(30.0, 0.0), 0, &r));
    }

    #[test]
    fn grid_index_matches_brute_force() {
        let params = NetworkParams::new(3000.0, 0.3);
        let window = Window::centered_square(800.0, 25.0).unwrap();
        let real = build_realization(&params, &window, 7).unwrap();
        assert!(real.blockages.len() > BRUTE_FORCE_LIMIT);
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..2000 {
            let p = Point2::new(rng.random_range(-400.0..400.0), rng.random_range(-400.0..400.0));
            let q = Point2::new(rng.random_range(-400.0..400.0), rng.random_range(-400.0..400.0));
            let brute = !real
                .endpoints
                .iter()
                .any(|&(e1, e2)| closed_segments_intersect(p, q, e1, e2));
            assert_eq!(los_clear(p, q, &real, None), brute, "{p:?} {q:?}");
        }
        // axis-aligned and cell-boundary queries
        for k in -10..=10 {
            let c = k as f64 * 25.0;
            let pairs = [
                (Point2::new(c, -400.0), Point2::new(c, 400.0)),
                (Point2::new(-400.0, c), Point2::new(400.0, c)),
            ];
            for (p, q) in pairs {
                let brute = !real
                    .endpoints
                    .iter()
                    .any(|&(e1, e2)| closed_segments_intersect(p, q, e1, e2));
                assert_eq!(los_clear(p, q, &real, None), brute);
            }
        }
    }

    #[test]
    fn mu_extremes_and_nesting() {
        let window = Window::centered_square(500.0, 0.0).unwrap();
        let none = build_realization(&NetworkParams::new(500.0, 0.0), &window, 3).unwrap();
        assert!(none.blockages.iter().all(|b| b.ris.is_none()));
        let all = none.with_mu(1.0).unwrap();
        assert!(all.blockages.iter().all(|b| b.ris.is_some()));
        let half = none.with_mu(0.5).unwrap();
        let quarter = none.with_mu(0.25).unwrap();
        for (a, b) in quarter.blockages.iter().zip(&half.blockages) {
            assert!(a.ris.is_none() || b.ris == a.ris);
        }
    }

    #[test]
    fn realization_is_reproducible() {
        let window = Window::centered_square(500.0, 100.0).unwrap();
        let p = NetworkParams::new(500.0, 0.2);
        let a = build_realization(&p, &window, 11).unwrap();
        let b = build_realization(&p, &window, 11).unwrap();
        assert_eq!(a.bs, b.bs);
        assert_eq!(a.blockages, b.blockages);
        let ext = window.expanded();
        assert!(a.bs.iter().all(|&q| ext.contains(q)));
        assert!(a.blockages.iter().all(|b| ext.contains(b.segment.midpoint)));
    }

    #[test]
    fn blockage_count_matches_density() {
        let window = Window::centered_square(1000.0, 0.0).unwrap();
        let p = NetworkParams::new(500.0, 0.0);
        let n = 1000;
        let mean = (0..n)
            .map(|s| build_realization(&p, &window, s).unwrap().blockages.len() as f64)
            .sum::<f64>()
            / n as f64;
        // Poisson(500): the mean of 1000 draws has sd 0.71
        assert!((mean - 500.0).abs() < 3.0, "{mean}");
    }

    #[test]
    fn association_and_coverage_agree() {
        let window = Window::centered_square(600.0, 400.0).unwrap();
        for seed in 0..20 {
            let real = build_realization(&NetworkParams::new(700.0, 0.1), &window, seed).unwrap();
            for k in 0..10 {
                let u = Point2::new(-300.0 + 60.0 * k as f64, 17.0 * k as f64);
                let tag = associate_user(u, &real).tag;
                assert_eq!(tag != LinkTag::Blind, is_covered(u, &real), "seed {seed}, user {u:?}");
            }
        }
    }
}
