use crate::actuation::{command_currents, ActuationCommand, FieldPerAmpMatrix, RotatingField};
use crate::coil_model::{CoilAssembly, FieldGradient, FieldVector};
use crate::Vec3;

use super::SimError;

/// Field and Jacobian seen by the robot at time `t` and `position`.
pub trait FieldSource {
    fn sample(&mut self, t: f64, position: &Vec3)
        -> Result<(FieldVector, FieldGradient), SimError>;
}

/// Spatially and temporally constant field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformField(pub FieldVector);

impl FieldSource for UniformField {
    fn sample(
        &mut self,
        _t: f64,
        _position: &Vec3,
    ) -> Result<(FieldVector, FieldGradient), SimError> {
        Ok((self.0, FieldGradient::zero()))
    }
}

/// Ideal rotating field, uniform in space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotatingUniform(pub RotatingField);

impl FieldSource for RotatingUniform {
    fn sample(
        &mut self,
        t: f64,
        _position: &Vec3,
    ) -> Result<(FieldVector, FieldGradient), SimError> {
        Ok((self.0.at(t), FieldGradient::zero()))
    }
}

/// Full chain: command -> currents -> assembly field at the robot.
#[derive(Debug, Clone)]
pub struct AssemblyDriven {
    pub assembly: CoilAssembly,
    pub matrix: FieldPerAmpMatrix,
    pub command: ActuationCommand,
}

impl AssemblyDriven {
    pub fn new(assembly: CoilAssembly, command: ActuationCommand) -> Result<Self, SimError> {
        let matrix = FieldPerAmpMatrix::from_assembly(&assembly)?;
        Ok(AssemblyDriven {
            assembly,
            matrix,
            command,
        })
    }
}

impl FieldSource for AssemblyDriven {
    fn sample(
        &mut self,
        t: f64,
        position: &Vec3,
    ) -> Result<(FieldVector, FieldGradient), SimError> {
        let currents = command_currents(&self.assembly, &self.matrix, &self.command, t)?;
        let b = self.assembly.field(&currents.values, position)?;
        let g = self.assembly.gradient(&currents.values, position)?;
        Ok((b, g))
    }
}
