from scanspectra import odm


@odm.model(description="One listed state of an explicit weight table")
class WeightEntry(odm.Model):
    state: list[int] = odm.sequence(odm.Integer(min=0))
    w: float = odm.Float(min=0)


@odm.model(description="Explicit weight table: unlisted states weigh 0")
class ModelFile(odm.Model):
    alphabets: list[int] = odm.sequence(odm.Integer(min=1))
    weights: list[WeightEntry] = odm.sequence(odm.compound(WeightEntry))
