use jpp_core::{ChallengeFactor, JointId, JointSet, Visibility};

/// Challenge-factor tags as a pure function of the joint annotation.
///
/// * head-missing: head-top and upper-neck both absent
/// * upper-body: knees and ankles all absent
/// * lower-body: thorax, upper-neck, head-top and both shoulders absent
/// * full-body: all 16 joints annotated
/// * occlusion: at least one joint occluded-but-annotated
/// * back-view: the subject's right shoulder (or hip) lies right of its left
///   one in the image
pub fn derive_factors(joints: &JointSet) -> Vec<ChallengeFactor> {
    let absent = |ids: &[JointId]| ids.iter().all(|&i| !joints.get(i).is_present());
    let mut tags = Vec::new();
    if joints.0.iter().any(|j| j.vis == Visibility::Occluded) {
        tags.push(ChallengeFactor::Occlusion);
    }
    if joints.present_count() == joints.0.len() {
        tags.push(ChallengeFactor::FullBody);
    }
    if absent(&[JointId::L_KNEE, JointId::R_KNEE, JointId::L_ANKLE, JointId::R_ANKLE]) {
        tags.push(ChallengeFactor::UpperBody);
    }
    if absent(&[
        JointId::THORAX,
        JointId::UPPER_NECK,
        JointId::HEAD_TOP,
        JointId::L_SHOULDER,
        JointId::R_SHOULDER,
    ]) {
        tags.push(ChallengeFactor::LowerBody);
    }
    if absent(&[JointId::HEAD_TOP, JointId::UPPER_NECK]) {
        tags.push(ChallengeFactor::HeadMissing);
    }
    let facing_away = |r: JointId, l: JointId| {
        let (r, l) = (joints.get(r), joints.get(l));
        (r.is_present() && l.is_present()).then(|| r.x > l.x)
    };
    let back = facing_away(JointId::R_SHOULDER, JointId::L_SHOULDER)
        .or_else(|| facing_away(JointId::R_HIP, JointId::L_HIP))
        .unwrap_or(false);
    if back {
        tags.push(ChallengeFactor::BackView);
    }
    tags
}

#[cfg(test)]
mod tests {
    use super::*;
    use jpp_core::Joint;

    fn full() -> JointSet {
        let mut j = JointSet::absent();
        for (i, s) in j.0.iter_mut().enumerate() {
            *s = Joint::visible(i as f64, i as f64);
        }
        j.set(JointId::R_SHOULDER, Joint::visible(10.0, 5.0));
        j.set(JointId::L_SHOULDER, Joint::visible(20.0, 5.0));
        j
    }

    #[test]
    fn rules() {
        assert_eq!(derive_factors(&full()), vec![ChallengeFactor::FullBody]);

        // a mirrored image of a frontal person is still frontal
        let flipped = full().flipped(40);
        assert!(!derive_factors(&flipped).contains(&ChallengeFactor::BackView));
        let mut back = full();
        back.set(JointId::R_SHOULDER, Joint::visible(30.0, 5.0));
        assert!(derive_factors(&back).contains(&ChallengeFactor::BackView));

        let mut upper = full();
        for id in [JointId::L_KNEE, JointId::R_KNEE, JointId::L_ANKLE, JointId::R_ANKLE] {
            upper.set(id, Joint::ABSENT);
        }
        assert_eq!(derive_factors(&upper), vec![ChallengeFactor::UpperBody]);

        let mut occ = full();
        occ.get_mut(JointId::PELVIS).vis = Visibility::Occluded;
        assert_eq!(
            derive_factors(&occ),
            vec![ChallengeFactor::Occlusion, ChallengeFactor::FullBody]
        );

        let mut lower = full();
        for id in [
            JointId::THORAX,
            JointId::UPPER_NECK,
            JointId::HEAD_TOP,
            JointId::L_SHOULDER,
            JointId::R_SHOULDER,
        ] {
            lower.set(id, Joint::ABSENT);
        }
        assert_eq!(
            derive_factors(&lower),
            vec![ChallengeFactor::LowerBody, ChallengeFactor::HeadMissing]
        );
    }
}
