package mathx

// Clamp limits v to [lo, hi].
func Clamp(v, lo, hi int) int {
	if v < lo {
		return lo
	}
	if v > hi {
		return hi
	}
	return v
}

var raw = `func fake() {
}`

func Sum(xs ...int) (total int) {
	for _, x := range xs {
		total += x
	}
	return
}

type Pair struct{ A, B int }

func (p Pair) Swap() Pair { return Pair{p.B, p.A} }
