use nalgebra::{Matrix3, Matrix4, UnitQuaternion, Vector3, Vector4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::articulation::rnea::inverse_dynamics;
use super::*;
use crate::morphology::{
    augment_backlash, default_model, Foot, Geometry, JointKind, JointSpec, RobotModel, SegmentSpec,
};

fn segment(name: &str, parent_joint: Option<&str>, mass: f64, inertia: f64, com: Vector3<f64>) -> SegmentSpec {
    SegmentSpec {
        name: name.into(),
        mass,
        inertia_diag: Vector3::repeat(inertia),
        com,
        geometry: Geometry::Capsule {
            radius: 0.01,
            half_length: 0.01,
        },
        parent_joint: parent_joint.map(Into::into),
        contacts: vec![],
    }
}

fn hinge(name: &str, parent: &str, child: &str, axis: Vector3<f64>) -> JointSpec {
    JointSpec {
        name: name.into(),
        parent: parent.into(),
        child: child.into(),
        origin: Vector3::zeros(),
        rpy: Vector3::zeros(),
        axis,
        kind: JointKind::Actuated,
        limits: [-10.0, 10.0],
        passive_stiffness: 0.0,
        passive_damping: 0.0,
        armature: 0.0,
    }
}

/// Point-mass pendulum of length `l` hanging from a pinned root, swinging about y.
fn pendulum(l: f64) -> RobotModel {
    let segs = vec![
        segment("pivot", None, 1.0, 1.0, Vector3::zeros()),
        segment("bob", Some("swing"), 1.0, 1e-10, Vector3::new(0.0, 0.0, -l)),
    ];
    RobotModel::new("pendulum", segs, vec![hinge("swing", "pivot", "bob", Vector3::y())], vec![0.0], None, None, true)
        .unwrap()
}

fn random_state(model: &RobotModel, rng: &mut ChaCha8Rng) -> SimState {
    let mut s = SimState::nominal(model);
    s.base_pos = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(0.0..1.0));
    s.base_quat = UnitQuaternion::from_euler_angles(
        rng.random_range(-0.5..0.5),
        rng.random_range(-0.5..0.5),
        rng.random_range(-3.0..3.0),
    );
    s.base_linvel = Vector3::from_fn(|_, _| rng.random_range(-1.0..1.0));
    s.base_angvel = Vector3::from_fn(|_, _| rng.random_range(-2.0..2.0));
    for (j, joint) in model.joints.iter().enumerate() {
        let [lo, hi] = joint.limits;
        s.q[j] = rng.random_range(lo..hi);
        s.qdot[j] = rng.random_range(-3.0..3.0);
    }
    s
}

fn zero_wrenches(model: &RobotModel) -> Vec<Wrench> {
    vec![Wrench::zero(); model.segments.len()]
}

// --- forward kinematics -------------------------------------------------

fn homogeneous(rot: Matrix3<f64>, t: Vector3<f64>) -> Matrix4<f64> {
    let mut m = Matrix4::identity();
    for r in 0..3 {
        for c in 0..3 {
            m[(r, c)] = rot[(r, c)];
        }
        m[(r, 3)] = t[r];
    }
    m
}

/// Rodrigues' formula written out by hand.
fn axis_angle(k: Vector3<f64>, a: f64) -> Matrix3<f64> {
    let kx = Matrix3::new(0.0, -k.z, k.y, k.z, 0.0, -k.x, -k.y, k.x, 0.0);
    Matrix3::identity() + kx * a.sin() + kx * kx * (1.0 - a.cos())
}

fn rpy(r: Vector3<f64>) -> Matrix3<f64> {
    let (cr, sr) = (r.x.cos(), r.x.sin());
    let (cp, sp) = (r.y.cos(), r.y.sin());
    let (cy, sy) = (r.z.cos(), r.z.sin());
    let rx = Matrix3::new(1.0, 0.0, 0.0, 0.0, cr, -sr, 0.0, sr, cr);
    let ry = Matrix3::new(cp, 0.0, sp, 0.0, 1.0, 0.0, -sp, 0.0, cp);
    let rz = Matrix3::new(cy, -sy, 0.0, sy, cy, 0.0, 0.0, 0.0, 1.0);
    rz * ry * rx
}

#[test]
fn foot_position_matches_chain_multiplication() {
    let model = default_model();
    let art = Articulation::new(&model);
    let mut state = SimState::nominal(&model);
    state.base_pos = Vector3::new(0.2, -0.1, 0.15);
    state.base_quat = UnitQuaternion::from_euler_angles(0.05, -0.1, 0.7);
    let hip = model.joint_index("fl_hip_pitch").unwrap();
    state.q[hip] += 0.3;

    // root → fl_hip → fl_upper → fl_lower, composed as 4×4 transforms
    let mut t = homogeneous(state.base_quat.to_rotation_matrix().into_inner(), state.base_pos);
    for name in ["fl_hip_yaw", "fl_hip_pitch", "fl_knee"] {
        let ji = model.joint_index(name).unwrap();
        let j = &model.joints[ji];
        t = t * homogeneous(rpy(j.rpy), j.origin) * homogeneous(axis_angle(j.axis, state.q[ji]), Vector3::zeros());
    }
    let foot_seg = model.foot_segment(Foot::FL).unwrap();
    let tip = model.segments[foot_seg].contacts[0].offset;
    let oracle = t * Vector4::new(tip.x, tip.y, tip.z, 1.0);

    let kin = art.kinematics(&state).unwrap();
    let got = kin.point(foot_seg, &tip);
    assert!((got - oracle.xyz()).norm() < 1e-9, "{got} vs {}", oracle.xyz());
}

#[test]
fn nominal_feet_are_level() {
    let model = default_model();
    let kin = Articulation::new(&model).kinematics(&SimState::nominal(&model)).unwrap();
    let heights: Vec<f64> = Foot::ALL
        .iter()
        .map(|&f| {
            let s = model.foot_segment(f).unwrap();
            kin.point(s, &model.segments[s].contacts[0].offset).z
        })
        .collect();
    for h in &heights {
        assert!((h - heights[0]).abs() < 1e-9, "{heights:?}");
    }
}

#[test]
fn yaw_by_pi_negates_planar_positions() {
    let model = default_model();
    let art = Articulation::new(&model);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut s = random_state(&model, &mut rng);
    s.base_pos = Vector3::zeros();
    s.base_quat = UnitQuaternion::identity();
    let a = forward_kinematics(&art, &s).unwrap();
    s.base_quat = UnitQuaternion::from_euler_angles(0.0, 0.0, std::f64::consts::PI);
    let b = forward_kinematics(&art, &s).unwrap();
    for (pa, pb) in a.iter().zip(&b) {
        assert!((pa.position.x + pb.position.x).abs() < 1e-9);
        assert!((pa.position.y + pb.position.y).abs() < 1e-9);
        assert!((pa.position.z - pb.position.z).abs() < 1e-9);
    }
}

#[test]
fn root_pose_equals_base_pose() {
    let model = default_model();
    let art = Articulation::new(&model);
    let s = random_state(&model, &mut ChaCha8Rng::seed_from_u64(2));
    let poses = forward_kinematics(&art, &s).unwrap();
    let root = &poses[model.root];
    assert_eq!(root.position, s.base_pos);
    assert!(root.orientation.angle_to(&s.base_quat) < 1e-12);
    assert!((root.linvel - s.base_linvel).norm() < 1e-12);
}

#[test]
fn wrong_dimensions_are_reported() {
    let model = default_model();
    let art = Articulation::new(&model);
    let mut s = SimState::nominal(&model);
    s.q.pop();
    assert!(matches!(art.kinematics(&s), Err(RigidBodyError::DimensionMismatch { what: "q", .. })));
    let s = SimState::nominal(&model);
    let err = step(&art, &s, &[0.0; 3], &zero_wrenches(&model), 1e-3).unwrap_err();
    assert!(matches!(err, RigidBodyError::DimensionMismatch { what: "joint_torques", .. }));
}

// --- CoM ------------------------------------------------------------------

#[test]
fn com_velocity_is_mass_weighted() {
    // two bodies on a prismatic-free toy: place both masses on a free root
    // and a child, then prescribe velocities through the joint rate.
    let segs = vec![
        segment("a", None, 1.0, 1e-3, Vector3::zeros()),
        segment("b", Some("j"), 3.0, 1e-3, Vector3::new(1.0, 0.0, 0.0)),
    ];
    let model =
        RobotModel::new("two", segs, vec![hinge("j", "a", "b", Vector3::z())], vec![0.0], None, None, false).unwrap();
    let art = Articulation::new(&model);
    let mut s = SimState::nominal(&model);
    // root moves at +1 in x; the child's CoM is at (1,0,0) with the hinge
    // spinning at -2 rad/s about z and the root at +... choose ω_root = 0:
    // v_b = v_root + (-2 ẑ) × (1,0,0) = (1, -2, 0). Use instead a rotation
    // about z placing the child on the y axis so the spin maps onto x.
    s.q[0] = std::f64::consts::FRAC_PI_2; // child CoM at (0, 1, 0)
    s.base_linvel = Vector3::new(1.0, 0.0, 0.0);
    s.qdot[0] = 2.0; // (2 ẑ) × (0,1,0) = (-2, 0, 0) → child at -1 m/s
    let kin = art.kinematics(&s).unwrap();
    let c = com_state(&art, &model, &kin);
    assert!((c.velocity.x - (1.0 * 1.0 + 3.0 * -1.0) / 4.0).abs() < 1e-12);
    assert!(c.velocity.y.abs() < 1e-12);
    assert!((c.yaw_rate - 3.0 * 2.0 / 4.0).abs() < 1e-12);
}

#[test]
fn com_of_rigid_translation() {
    let model = default_model();
    let art = Articulation::new(&model);
    let mut s = SimState::nominal(&model);
    let kin = art.kinematics(&s).unwrap();
    assert_eq!(com_state(&art, &model, &kin).velocity.norm(), 0.0);
    s.base_linvel = Vector3::new(1.0, 0.0, 0.0);
    let kin = art.kinematics(&s).unwrap();
    assert!((com_state(&art, &model, &kin).velocity - Vector3::x()).norm() < 1e-12);
}

// --- forward dynamics -------------------------------------------------------

#[test]
fn no_forces_no_motion() {
    let model = default_model();
    let art = Articulation::new(&model);
    let s = SimState::nominal(&model);
    let kin = art.kinematics(&s).unwrap();
    let acc = art
        .forward_dynamics_with_gravity(&kin, &s, &vec![0.0; model.joints.len()], &zero_wrenches(&model), None, &Vector3::zeros())
        .unwrap();
    assert!(acc.base.norm() < 1e-12);
    assert!(acc.qdd.iter().all(|a| a.abs() < 1e-12));
}

#[test]
fn free_fall_is_uniform() {
    let model = default_model();
    let art = Articulation::new(&model);
    let mut s = SimState::nominal(&model);
    s.base_quat = UnitQuaternion::from_euler_angles(0.3, -0.2, 1.0);
    let kin = art.kinematics(&s).unwrap();
    let acc = art.forward_dynamics(&kin, &s, &vec![0.0; model.joints.len()], &zero_wrenches(&model), None).unwrap();
    assert!((acc.base_linear_world(&s) - GRAVITY).norm() < 1e-9);
    assert!(spatial::angular(&acc.base).norm() < 1e-9);
    assert!(acc.qdd.iter().all(|a| a.abs() < 1e-9));
}

#[test]
fn pendulum_matches_analytic_acceleration() {
    for l in [0.3, 1.0] {
        let model = pendulum(l);
        let art = Articulation::new(&model);
        for q in [-2.5, -0.7, 0.0, 0.4, 1.3, 3.0] {
            let mut s = SimState::nominal(&model);
            s.q[0] = q;
            let kin = art.kinematics(&s).unwrap();
            let acc = art.forward_dynamics(&kin, &s, &[0.0], &zero_wrenches(&model), None).unwrap();
            let oracle = -(G / l) * q.sin();
            assert!((acc.qdd[0] - oracle).abs() < 1e-6, "q={q}: {} vs {oracle}", acc.qdd[0]);
        }
    }
}

#[test]
fn articulated_dynamics_agree_with_newton_euler() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for model in [default_model(), augment_backlash(&default_model(), 4.0).unwrap(), pendulum(0.5)] {
        let art = Articulation::new(&model);
        for _ in 0..10 {
            let s = random_state(&model, &mut rng);
            let tau: Vec<f64> = model
                .joints
                .iter()
                .map(|j| if j.is_actuated() { rng.random_range(-1.0..1.0) } else { 0.0 })
                .collect();
            let ext: Vec<Wrench> = (0..model.segments.len())
                .map(|_| Wrench {
                    force: Vector3::from_fn(|_, _| rng.random_range(-2.0..2.0)),
                    torque: Vector3::from_fn(|_, _| rng.random_range(-0.1..0.1)),
                })
                .collect();
            let kin = art.kinematics(&s).unwrap();
            let acc = art.forward_dynamics(&kin, &s, &tau, &ext, None).unwrap();
            let (residual, tau_id) = inverse_dynamics(&art, &model, &s, &acc, &ext);
            if !model.fixed_base {
                assert!(residual.norm() < 1e-8, "{residual}");
            }
            for (a, b) in tau.iter().zip(&tau_id) {
                assert!((a - b).abs() < 1e-8 * (1.0 + a.abs()), "{a} vs {b}");
            }
        }
    }
}

#[test]
fn locked_joint_has_zero_acceleration_and_consistent_dynamics() {
    let model = default_model();
    let art = Articulation::new(&model);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let s = random_state(&model, &mut rng);
    let tau = vec![0.3; model.joints.len()];
    let ext = zero_wrenches(&model);
    let mut locks = vec![false; model.joints.len()];
    locks[3] = true;
    locks[10] = true;
    let kin = art.kinematics(&s).unwrap();
    let acc = art.forward_dynamics(&kin, &s, &tau, &ext, Some(&locks)).unwrap();
    assert_eq!(acc.qdd[3], 0.0);
    assert_eq!(acc.qdd[10], 0.0);
    // Newton-Euler reproduces the torques on every free joint; the locked
    // ones carry whatever reaction keeps them rigid.
    let (residual, tau_id) = inverse_dynamics(&art, &model, &s, &acc, &ext);
    assert!(residual.norm() < 1e-8);
    for j in (0..model.joints.len()).filter(|j| !locks[*j]) {
        assert!((tau_id[j] - tau[j]).abs() < 1e-8);
    }
}

// --- integration ----------------------------------------------------------

#[test]
fn free_fall_drop_matches_half_g_t_squared() {
    let model = default_model();
    let art = Articulation::new(&model);
    let tau = vec![0.0; model.joints.len()];
    let ext = zero_wrenches(&model);
    let dt = 1e-3;
    let n = 1000;
    let s0 = SimState::nominal(&model);

    // leapfrog-staggered start: no first-order position bias
    let mut s = prime_leapfrog(&art, &s0, &tau, &ext, dt).unwrap();
    for _ in 0..n {
        s = step(&art, &s, &tau, &ext, dt).unwrap();
    }
    let drop = s0.base_pos.z - s.base_pos.z;
    assert!((drop - 4.905).abs() < 1e-3, "{drop}");

    // plain start: bias bounded by g·dt·T/2
    let mut s = s0.clone();
    for _ in 0..n {
        s = step(&art, &s, &tau, &ext, dt).unwrap();
    }
    let drop = s0.base_pos.z - s.base_pos.z;
    assert!((drop - 4.905).abs() <= G * dt * 1.0 / 2.0 + 1e-9, "{drop}");
    assert!((s.time - 1.0).abs() < 1e-9);
}

#[test]
fn ballistic_step_advances_by_velocity() {
    let model = default_model();
    let art = Articulation::new(&model);
    let mut s = SimState::nominal(&model);
    s.base_linvel = Vector3::new(0.3, -0.2, 0.1);
    let next = step_with_gravity(&art, &s, &vec![0.0; model.joints.len()], &zero_wrenches(&model), 0.01, &Vector3::zeros())
        .unwrap();
    assert!((next.base_pos - s.base_linvel * 0.01).norm() < 1e-15);
}

fn pendulum_energy(l: f64, s: &SimState) -> f64 {
    0.5 * (l * l + 1e-10) * s.qdot[0].powi(2) - G * l * s.q[0].cos()
}

#[test]
fn pendulum_energy_drift_is_bounded() {
    let l = 0.5;
    let model = pendulum(l);
    let art = Articulation::new(&model);
    let mut s = SimState::nominal(&model);
    s.q[0] = 0.8;
    let amplitude_energy = G * l * (1.0 - 0.8f64.cos());
    let e0 = pendulum_energy(l, &s);
    let ext = zero_wrenches(&model);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        s = step(&art, &s, &[0.0], &ext, 1e-3).unwrap();
        worst = worst.max((pendulum_energy(l, &s) - e0).abs());
    }
    assert!(worst < 0.01 * amplitude_energy, "{worst} vs {amplitude_energy}");
}

fn linear_momentum(art: &Articulation, model: &RobotModel, s: &SimState) -> Vector3<f64> {
    let kin = art.kinematics(s).unwrap();
    com_state(art, model, &kin).velocity * art.total_mass()
}

#[test]
fn internal_torques_conserve_momentum() {
    let model = default_model();
    let art = Articulation::new(&model);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let ext = zero_wrenches(&model);
    let mut s = random_state(&model, &mut rng);
    for _ in 0..200 {
        let tau: Vec<f64> = (0..model.joints.len()).map(|_| rng.random_range(-0.5..0.5)).collect();
        let next = step_with_gravity(&art, &s, &tau, &ext, 1e-3, &Vector3::zeros()).unwrap();
        let p0 = linear_momentum(&art, &model, &s);
        let p1 = linear_momentum(&art, &model, &next);
        assert!((p1 - p0).norm() < 1e-8, "{}", (p1 - p0).norm());
        s = next;
    }
}

#[test]
fn step_is_deterministic_and_keeps_unit_quaternion() {
    let model = augment_backlash(&default_model(), 4.0).unwrap();
    let art = Articulation::new(&model);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let s0 = random_state(&model, &mut rng);
    let tau: Vec<f64> = model.joints.iter().map(|j| if j.is_actuated() { 0.2 } else { 0.0 }).collect();
    let ext = zero_wrenches(&model);
    let (mut a, mut b) = (s0.clone(), s0);
    for _ in 0..500 {
        a = step(&art, &a, &tau, &ext, 2e-3).unwrap();
        b = step(&art, &b, &tau, &ext, 2e-3).unwrap();
        assert!((a.base_quat.norm() - 1.0).abs() < 1e-9);
    }
    assert_eq!(snapshot_row(&a).iter().map(|x| x.to_bits()).collect::<Vec<_>>(),
        snapshot_row(&b).iter().map(|x| x.to_bits()).collect::<Vec<_>>());
}

#[test]
fn limits_clamp_position_and_zero_velocity() {
    let model = pendulum(0.5);
    let mut model = model;
    model.joints[0].limits = [-0.2, 0.2];
    let art = Articulation::new(&model);
    let mut s = SimState::nominal(&model);
    s.q[0] = 0.19;
    s.qdot[0] = 5.0;
    let ext = zero_wrenches(&model);
    for _ in 0..100 {
        s = step(&art, &s, &[1.0], &ext, 1e-3).unwrap();
        assert!(s.q[0] <= 0.2 && s.q[0] >= -0.2);
    }
    // pushed into the stop: resting there
    assert_eq!(s.q[0], 0.2);
    assert_eq!(s.qdot[0], 0.0);
}

#[test]
fn nonpositive_dt_is_rejected() {
    let model = pendulum(1.0);
    let art = Articulation::new(&model);
    let s = SimState::nominal(&model);
    assert!(matches!(step(&art, &s, &[0.0], &zero_wrenches(&model), 0.0), Err(RigidBodyError::InvalidTimeStep(_))));
}

#[test]
fn divergence_reports_the_step() {
    let model = pendulum(1.0);
    let art = Articulation::new(&model);
    let mut s = SimState::nominal(&model);
    s.time = 0.5;
    let err = step(&art, &s, &[f64::NAN], &zero_wrenches(&model), 1e-3).unwrap_err();
    assert_eq!(err, RigidBodyError::Diverged { step: 500 });
}

// --- backlash -------------------------------------------------------------

#[test]
fn backlash_at_rest_is_kinematically_neutral() {
    let plain = default_model();
    let aug = augment_backlash(&plain, 4.0).unwrap();
    let (ap, aa) = (Articulation::new(&plain), Articulation::new(&aug));
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let sp = random_state(&plain, &mut rng);
    let mut sa = SimState::nominal(&aug);
    sa.base_pos = sp.base_pos;
    sa.base_quat = sp.base_quat;
    sa.q[..sp.q.len()].copy_from_slice(&sp.q);
    let kp = ap.kinematics(&sp).unwrap();
    let ka = aa.kinematics(&sa).unwrap();
    for s in 0..plain.segments.len() {
        let name = &plain.segments[s].name;
        let t = aug.segment_index(name).unwrap();
        assert!((kp.origin(s) - ka.origin(t)).norm() < 1e-12, "{name}");
    }
}

#[test]
fn tiny_backlash_is_near_rigid() {
    let plain = default_model();
    let aug = augment_backlash(&plain, 1e-4).unwrap();
    let (ap, aa) = (Articulation::new(&plain), Articulation::new(&aug));
    let sp = SimState::nominal(&plain);
    let mut sa = SimState::nominal(&aug);
    // passive joints pushed to their limits
    for (j, joint) in aug.joints.iter().enumerate().filter(|(_, j)| !j.is_actuated()) {
        sa.q[j] = joint.limits[1];
    }
    let kp = ap.kinematics(&sp).unwrap();
    let ka = aa.kinematics(&sa).unwrap();
    for f in Foot::ALL {
        let s = plain.foot_segment(f).unwrap();
        let t = aug.foot_segment(f).unwrap();
        let off = plain.segments[s].contacts[0].offset;
        assert!((kp.point(s, &off) - ka.point(t, &off)).norm() < 1e-5);
    }
}

// --- contact --------------------------------------------------------------

#[test]
fn feet_above_ground_have_no_contact() {
    let model = default_model();
    let art = Articulation::new(&model);
    let mut s = SimState::nominal(&model);
    let kin0 = art.kinematics(&s).unwrap();
    let fs = model.foot_segment(Foot::FL).unwrap();
    let sphere = model.segments[fs].contacts[0];
    let lowest = kin0.point(fs, &sphere.offset).z - sphere.radius;
    s.base_pos.z = -lowest + 1e-3;
    let kin = art.kinematics(&s).unwrap();
    let (report, wrenches) = contact_forces(&model, &kin, &TerrainField::flat(), &ContactParams::default());
    assert_eq!(report.total_contacts(), 0);
    assert!(wrenches.iter().all(|w| w.force.norm() == 0.0));

    s.base_pos.z = -lowest - 1e-3;
    let kin = art.kinematics(&s).unwrap();
    let (report, _) = contact_forces(&model, &kin, &TerrainField::flat(), &ContactParams::default());
    for f in Foot::ALL {
        let c = report.foot(f);
        assert!(c.in_contact);
        assert!((c.penetration - 1e-3).abs() < 1e-9);
        assert!((c.normal_force - 5.0).abs() < 1e-6);
    }
}

#[test]
fn robot_settles_on_flat_ground() {
    let model = default_model();
    let art = Articulation::new(&model);
    let mut s = SimState::nominal(&model);
    s.base_pos.z = 0.125;
    let params = ContactParams::default();
    let terrain = TerrainField::flat();
    let kp = 15.0;
    let kd = 0.15;
    let q_nom = model.nominal_joint_positions();
    for _ in 0..1500 {
        let kin = art.kinematics(&s).unwrap();
        let (_, ext) = contact_forces(&model, &kin, &terrain, &params);
        let tau: Vec<f64> = (0..model.joints.len()).map(|j| kp * (q_nom[j] - s.q[j]) - kd * s.qdot[j]).collect();
        s = step(&art, &s, &tau, &ext, 2e-3).unwrap();
    }
    let kin = art.kinematics(&s).unwrap();
    let (report, _) = contact_forces(&model, &kin, &terrain, &params);
    assert_eq!(report.foot_contact_count(), 4, "{report:?}");
    let total_normal: f64 = report.feet.iter().map(|f| f.normal_force).sum::<f64>() + report.body_normal_force;
    let weight = art.total_mass() * G;
    assert!((total_normal - weight).abs() < 0.05 * weight, "{total_normal} vs {weight}");
    assert!(s.base_linvel.norm() < 1e-2);
    assert!(s.base_pos.z > 0.08, "{}", s.base_pos.z);
}
